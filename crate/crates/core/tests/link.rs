use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use visionran::twin::{link_quality, path_loss, LinkModel, LosStatus};

#[test]
fn blocked_at_ten_meters_is_forty_five_db() {
    assert_eq!(path_loss(10.0, LosStatus::Nlos, &LinkModel::default()), 45.0);
}

#[test]
fn obstruction_adds_exactly_a_obs() {
    let link = LinkModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let d = rng.gen_range(0.1..20.0);
        let gap = path_loss(d, LosStatus::Nlos, &link) - path_loss(d, LosStatus::Los, &link);
        assert_eq!(gap, 25.0, "d = {d}");
        let snr_gap = link_quality(path_loss(d, LosStatus::Los, &link), &link).snr_db
            - link_quality(path_loss(d, LosStatus::Nlos, &link), &link).snr_db;
        assert_eq!(snr_gap, 25.0, "d = {d}");
    }
}

#[test]
fn free_space_term_matches_natural_log() {
    let link = LinkModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let d: f64 = rng.gen_range(0.1..100.0);
        let want = 20.0 * d.ln() / std::f64::consts::LN_10;
        assert!((path_loss(d, LosStatus::Los, &link) - want).abs() < 1e-9);
    }
}

#[test]
fn throughput_never_rises_with_loss() {
    let link = LinkModel::default();
    let mut last = f64::INFINITY;
    for i in 0..2000 {
        let pl = -20.0 + f64::from(i) * 0.05;
        let q = link_quality(pl, &link);
        assert_eq!(q.snr_db, link.tx_power_dbm - pl - link.noise_floor_dbm);
        assert!(q.throughput_bps <= last);
        last = q.throughput_bps;
    }
    assert_eq!(last, 0.0);
}
