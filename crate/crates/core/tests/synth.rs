use sharecast::analytics::{conversion_index, GroupBy, Mode};
use sharecast::events::PurchaseIndex;
use sharecast::synth::{generate, Effects, SynthConfig};

fn small() -> SynthConfig {
    SynthConfig { users: 3000, items: 200, categories: 10, ..SynthConfig::default() }
}

#[test]
fn same_seed_same_logs() {
    let cfg = small();
    assert_eq!(generate(&cfg, 5).unwrap(), generate(&cfg, 5).unwrap());
    assert_ne!(generate(&cfg, 5).unwrap().diffusions, generate(&cfg, 6).unwrap().diffusions);
}

#[test]
fn negligible_base_rate_gives_no_purchases() {
    let cfg = SynthConfig {
        affinity_scale: 0.0,
        effects: Effects { intercept: -50.0, ..Effects::default() },
        ..small()
    };
    let logs = generate(&cfg, 1).unwrap();
    assert!(logs.purchases.is_empty(), "{} purchases", logs.purchases.len());
    assert!(!logs.diffusions.is_empty());
}

#[test]
fn taocode_effect_alone_lifts_share_conversion() {
    let cfg = SynthConfig {
        affinity_scale: 0.0,
        effects: Effects {
            intercept: -3.0,
            taocode: 1.5,
            neighbors: 0.0,
            sender_bought: 0.0,
            price: 0.0,
            gap: 0.0,
            ..Effects::default()
        },
        ..small()
    };
    let log = generate(&cfg, 2).unwrap().to_event_log().unwrap();
    let purchases = PurchaseIndex::new(log.n_users(), &log.purchases);
    let horizon = cfg.step_length;
    let tao = conversion_index(&log, &purchases, Mode::Taocode, GroupBy::Item, horizon).total();
    let browse = conversion_index(&log, &purchases, Mode::Browse, GroupBy::Item, horizon).total();
    assert!(tao.ci().unwrap() > browse.ci().unwrap(), "{tao:?} vs {browse:?}");
}

#[test]
fn generated_logs_round_trip_through_text() {
    let logs = generate(&SynthConfig { users: 500, items: 50, ..small() }, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    logs.write_dir(dir.path()).unwrap();
    let a = logs.to_event_log().unwrap();
    let b = sharecast::events::EventLog::load_dir(dir.path()).unwrap();
    assert_eq!(a, b);
}
