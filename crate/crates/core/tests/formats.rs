use vwlb_core::blr::{simulate_blr, BlrData};
use vwlb_core::gmm::{simulate_gmm, GmmConfig, GmmModel};
use vwlb_core::inference::{coverage_experiment, CoverageConfig, ModelSpec};
use vwlb_core::io::{
    format_coverage_csv, format_design, format_draws_csv, parse_column, parse_coverage_csv, parse_design,
    parse_draws_csv, COVERAGE_HEADER,
};
use vwlb_core::{reverted_draws, run_vwlb, DrawSource, FitOptions, GibbsSettings, VwlbOptions, WeightScheme};

#[test]
fn draws_survive_a_csv_round_trip() {
    let config = GmmConfig::with_separation(3, 4.0);
    let model = GmmModel::new(simulate_gmm(150, &config, 1).unwrap().x, config).unwrap();
    let options = VwlbOptions::new(12, WeightScheme::DirichletN, FitOptions::default(), 8);
    let draws = run_vwlb(&model, &options).unwrap();
    let text = format_draws_csv(&draws);
    assert!(text.starts_with("b,converged,elbo,theta_1,theta_2,theta_3\n"));
    let back = parse_draws_csv(&text, DrawSource::Vwlb, 8).unwrap();
    assert_eq!(back.n_draws(), 12);
    for i in 0..12 {
        assert_eq!(back.row(i), draws.row(i));
        assert_eq!(back.replicate_index(i), draws.replicate_index(i));
    }
    let reverted = reverted_draws(&back, &[0.0; 3]).unwrap();
    assert_eq!(reverted.source, DrawSource::VwlbReverted);
    assert_eq!(reverted.row(0)[1], -back.row(0)[1]);
}

#[test]
fn regression_data_survives_text_round_trip() {
    let data = simulate_blr(40, &[1.0, -2.0, 0.5], 0.3, 1.0, 2).unwrap();
    let (x, p) = parse_design(&format_design(&data)).unwrap();
    let y = parse_column(&vwlb_core::io::format_column(&data.y)).unwrap();
    assert_eq!(BlrData::new(x, y, p).unwrap(), data);
}

#[test]
fn coverage_tables_round_trip() {
    let config = CoverageConfig {
        model: ModelSpec::Gmm(GmmConfig::with_separation(3, 5.0)),
        n: 100,
        replicates: 3,
        bootstrap: 20,
        level: 0.95,
        scheme: WeightScheme::Exp1,
        fit: FitOptions { n_restarts: 2, ..FitOptions::default() },
        gibbs: GibbsSettings { n_samples: 100, burnin: 100, thin: 2 },
        master_seed: 5,
        parallelism: 1,
    };
    let outcome = coverage_experiment(&config).unwrap();
    let text = format_coverage_csv(&outcome.reports);
    assert_eq!(text.lines().next(), Some(COVERAGE_HEADER));
    let rows = parse_coverage_csv(&text).unwrap();
    assert_eq!(rows.len(), 4 * 3);
    for row in rows {
        let report = outcome.report(row.method);
        assert_eq!(row.summary, report.per_coordinate[row.coordinate - 1]);
        assert_eq!(row.replicates, 3);
    }
}
