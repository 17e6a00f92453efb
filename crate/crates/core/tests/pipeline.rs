use cm_compete::compete::{oracle_competition, run_competition, Color, CompetitionConfig};
use cm_compete::experiment::{read_records, run_ensemble, run_replicate, write_records, ExperimentConfig};

fn small() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.n = 5_000;
    cfg.replicates = 4;
    cfg.master_seed = 17;
    cfg
}

#[test]
fn records_survive_a_csv_round_trip() {
    let ens = run_ensemble(&small()).unwrap();
    assert_eq!(ens.records.len(), 4);
    assert!(ens.records.windows(2).all(|w| w[0].run_id < w[1].run_id));
    let mut buf = Vec::new();
    write_records(&ens.records, &mut buf).unwrap();
    assert_eq!(read_records(buf.as_slice()).unwrap(), ens.records);

    let mut empty = Vec::new();
    write_records(&[], &mut empty).unwrap();
    assert!(String::from_utf8(empty).unwrap().starts_with("run_id,"));
}

#[test]
fn replicate_is_reproducible_and_matches_the_oracle() {
    let cfg = small();
    let model = cfg.model().unwrap();
    let a = run_replicate(&cfg, &model, 2).unwrap();
    let b = run_replicate(&cfg, &model, 2).unwrap();
    assert_eq!(a.record, b.record);
    assert_eq!(
        a.record.r_inf + a.record.b_inf,
        a.outcome.colors.iter().filter(|&&c| c != Color::Unpainted).count() as u64
    );
    assert!(a.record.yr_n > 0.0 && a.record.yb_n > 0.0);
    assert!(a.record.r_inf > a.record.b_inf);

    let source = |color| {
        (0..a.graph.n() as u32)
            .find(|&v| a.outcome.paint_tick[v as usize] == 0 && a.outcome.colors[v as usize] == color)
            .unwrap()
    };
    let (red, blue) = (source(Color::Red), source(Color::Blue));
    let comp =
        CompetitionConfig { lambda: cfg.lambda, red_source: red, blue_source: blue, tie_rule: cfg.tie_rule, seed: 1 };
    assert_eq!(run_competition(&a.graph, &comp).unwrap(), oracle_competition(&a.graph, &comp).unwrap());
}
