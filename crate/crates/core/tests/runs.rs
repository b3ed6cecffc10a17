use acnf::evaluators::oracle::{bundled_dataset, bundled_space, load_oracle_str};
use acnf::evaluators::synthetic::{Coordinate, PlantedPair};
use acnf::*;

fn landscape(seed: u64) -> SyntheticLandscape {
    let space = SearchSpace::from_sizes(&[4, 3, 5]).unwrap();
    let spec = LandscapeSpec::new(space, 1.0)
        .with_noise(1.5)
        .with_pair(PlantedPair::bonus(Coordinate::new("d0", "1"), Coordinate::new("d2", "3"), 4.0))
        .with_pair(PlantedPair::failing(Coordinate::new("d1", "2"), Coordinate::new("d2", "0"), 1.0))
        .with_pair(PlantedPair::failing(Coordinate::new("d0", "3"), Coordinate::new("d1", "0"), 0.5));
    SyntheticLandscape::new(spec, seed).unwrap()
}

#[test]
fn synthetic_score_matches_expected() {
    for seed in 0..5 {
        let mut land = landscape(seed);
        let space = land.space().clone();
        for combo in space.combinations() {
            let expected = land.expected_m(&combo).unwrap();
            let e = land.evaluate(&space, &combo).unwrap();
            match expected {
                Some(m) => {
                    let got = score(e.accuracy().unwrap(), e.time_s().unwrap()).unwrap();
                    assert!((got - m).abs() <= 1e-12 * m.max(1.0), "{combo}: {got} vs {m}");
                }
                None => assert_eq!(e.status(), Status::Incompatible),
            }
        }
    }
}

#[test]
fn synthetic_is_referentially_transparent() {
    let mut land = landscape(9);
    let space = land.space().clone();
    let combos: Vec<Combination> = space.combinations().collect();
    let first: Vec<Evaluation> = combos.iter().map(|c| land.evaluate(&space, c).unwrap()).collect();
    for i in 0..1000 {
        let c = &combos[(i * 37) % combos.len()];
        assert_eq!(land.evaluate(&space, c).unwrap(), first[(i * 37) % combos.len()]);
    }
}

#[test]
fn always_failing_pair_always_fails() {
    let mut land = landscape(3);
    let space = land.space().clone();
    for combo in space.combinations() {
        if combo.indices()[1] == 2 && combo.indices()[2] == 0 {
            assert_eq!(land.evaluate(&space, &combo).unwrap().status(), Status::Incompatible);
        }
    }
    assert_eq!(land.carriers(1), 4);
}

#[test]
fn split_run_equals_uninterrupted_run() {
    let space = bundled_space();
    for seed in 0..5 {
        let config = SearchConfig { k: 40, seed, ..SearchConfig::default() };
        let mut whole: Search = Search::new(space.clone(), config.clone(), Some(513)).unwrap();
        whole.run(&mut TableOracle::bundled(513)).unwrap();

        let mut first: Search = Search::new(space.clone(), config, Some(513)).unwrap();
        first.run_for(&mut TableOracle::bundled(513), 20).unwrap();
        let saved = RunState::capture(&first, Some(EvaluatorSource::Oracle { path: None })).to_json();
        let mut second = RunState::from_json(&saved).unwrap().into_search();
        second.run(&mut TableOracle::bundled(513)).unwrap();

        let source = Some(EvaluatorSource::Oracle { path: None });
        assert_eq!(
            RunState::capture(&whole, source.clone()).to_json(),
            RunState::capture(&second, source).to_json()
        );
        for format in [ReportFormat::Csv, ReportFormat::Markdown] {
            assert_eq!(
                emit_report(whole.table(), whole.state(), format),
                emit_report(second.table(), second.state(), format)
            );
        }
    }
}

#[test]
fn extension_continues_the_same_stream() {
    let space = bundled_space();
    let config = SearchConfig { k: 30, seed: 5, ..SearchConfig::default() };
    let mut long: Search =
        Search::new(space.clone(), SearchConfig { k: 45, ..config.clone() }, Some(513)).unwrap();
    long.run(&mut TableOracle::bundled(513)).unwrap();
    let mut short: Search = Search::new(space, config, Some(513)).unwrap();
    short.run(&mut TableOracle::bundled(513)).unwrap();
    short.extend(15);
    short.run(&mut TableOracle::bundled(513)).unwrap();
    assert_eq!(short, long);
}

#[test]
fn bundled_spot_values() {
    let (data, space, warnings) = load_oracle_str(evaluators::oracle::BUNDLED_CSV, 513).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(space.sizes(), vec![4, 3, 7]);
    assert_eq!(data.rows.len(), 12);
    let mut oracle = TableOracle::bundled(513);
    let bundled = bundled_space();
    let get = |o: &mut TableOracle, l: [&str; 3]| {
        o.evaluate(&bundled, &bundled.combination_of(&l).unwrap()).unwrap()
    };
    let e = get(&mut oracle, ["LRASPP-MobileNetV3-Small", "Apache TVM", "none"]);
    assert_eq!((e.accuracy(), e.time_s()), (Some(0.61), Some(0.39)));
    assert_eq!(e.m(), Some(0.61 / 0.39));
    let e = get(&mut oracle, ["LRASPP-MobileNetV3-Large", "Apache TVM", "alds-45"]);
    assert_eq!((e.accuracy(), e.time_s()), (Some(0.5639), Some(0.6)));
    let e = get(&mut oracle, ["DeepLabV3-MobileNetV3-Large", "PyTorch", "none"]);
    assert_eq!((e.accuracy(), e.time_s()), (Some(0.674), Some(37.0)));
    assert_eq!(get(&mut oracle, ["DeepLabV3-MobileNetV2", "PyTorch", "none"]).status(), Status::Incompatible);
    let e = get(&mut TableOracle::bundled(284), ["LRASPP-MobileNetV3-Small", "Apache TVM", "none"]);
    assert_eq!((e.accuracy(), e.time_s()), (Some(0.5848), Some(0.1)));
    assert_eq!(bundled_dataset().ok_count(284), 4);
}

#[test]
fn markdown_report_layout() {
    let space = bundled_space();
    let mut table = ResultsTable::new(&space, Some(513));
    let c = space.combination_of(&["LRASPP-MobileNetV3-Small", "Apache TVM", "none"]).unwrap();
    let d = space.combination_of(&["DeepLabV3-MobileNetV2", "PyTorch", "none"]).unwrap();
    table.record(&space, &d, &Evaluation::failure(Status::Incompatible), 0).unwrap();
    table.record(&space, &c, &Evaluation::ok(0.61, 0.39).unwrap(), 1).unwrap();
    table.record(&space, &c, &Evaluation::ok(0.61, 0.39).unwrap(), 2).unwrap();
    let state: SamplingState64 = init_state(&space, &SearchConfig::default()).unwrap();
    let md = emit_report(&table, &state, ReportFormat::Markdown);
    let expected = "\
### Input image size 513×513×3

| network | framework | compression | Inference Time [sec] | mIoU | Status | m | Hits | Probability |
|---|---|---|---|---|---|---|---|---|
| LRASPP-MobileNetV3-Small | Apache TVM | none | 0.39 | 61.0% | ok | 1.5641 | 2 | 0.011905 |
| DeepLabV3-MobileNetV2 | PyTorch | none |  |  | incompatible |  | 1 | 0.011905 |
";
    assert_eq!(md, expected);
    let csv = emit_report(&table, &state, ReportFormat::Csv);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "network,framework,compression,input_size,accuracy,time_s,status,m,hit_count,probability"
    );
    assert!(lines.next().unwrap().starts_with("LRASPP-MobileNetV3-Small,Apache TVM,none,513,0.61,0.39,ok,"));
}
