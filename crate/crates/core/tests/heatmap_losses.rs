use lhsynth::body_model::Vec3;
use lhsynth::heatmap::{decode, default_range, encode, peak, HeatmapSpec, HeatmapTriplet};
use lhsynth::losses::{
    heatmap_loss, kl_divergence, pretrain_loss, reg_loss, seg_loss, seg_loss_labels, KlDirection, LossWeights,
    LOG_EPS,
};
use lhsynth::rng::{self, Stream};
use rand::Rng;

fn random_joint(s: &mut Stream, spec: &HeatmapSpec) -> Vec3 {
    Vec3::from_fn(|c, _| s.random_range(spec.range[c][0]..spec.range[c][1]))
}

#[test]
fn round_trip_within_half_bin() {
    let spec = HeatmapSpec::default();
    assert!((spec.bin_width(0) - 3.0 / 128.0).abs() < 1e-15);
    let mut s = rng::seeded(5);
    let joints: Vec<Vec3> = (0..1000).map(|_| random_joint(&mut s, &spec)).collect();
    let enc = encode(&joints, &spec).unwrap();
    assert!(enc.clamped.iter().all(|c| !c));
    let back = decode(&enc.heatmaps, &spec).unwrap();
    for (a, b) in joints.iter().zip(&back) {
        for c in 0..3 {
            assert!((a[c] - b[c]).abs() <= spec.bin_width(c) / 2.0 + 1e-12);
        }
    }
}

#[test]
fn rows_normalised_and_mirrored() {
    let spec = HeatmapSpec::default();
    let j = Vec3::new(0.31, -0.72, 1.1);
    let enc = encode(&[j, -j], &spec).unwrap().heatmaps;
    for c in 0..3 {
        for k in 0..2 {
            assert!((enc.row(c, k).iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
        let mirrored: Vec<f64> = enc.row(c, 1).iter().rev().copied().collect();
        for (a, b) in enc.row(c, 0).iter().zip(&mirrored) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn decode_is_translation_equivariant() {
    let spec = HeatmapSpec::default();
    let mut s = rng::seeded(6);
    for _ in 0..100 {
        let j = random_joint(&mut s, &spec);
        let delta = Vec3::new(s.random_range(-30.0..30.0), s.random_range(-30.0..30.0), s.random_range(-3.0..3.0));
        let shifted = spec.clone().with_range(std::array::from_fn(|c| spec.range[c].map(|x| x + delta[c])));
        let a = encode(&[j], &spec).unwrap().heatmaps;
        let b = encode(&[j + delta], &shifted).unwrap().heatmaps;
        for c in 0..3 {
            assert_eq!(peak(a.row(c, 0)), peak(b.row(c, 0)));
        }
    }
}

#[test]
fn uniform_row_decodes_to_first_bin_and_zero_row_fails() {
    let spec = HeatmapSpec::default();
    let mut hm = HeatmapTriplet::zeros(1, spec.bins);
    for c in 0..3 {
        hm.row_mut(c, 0).fill(1.0 / 128.0);
    }
    assert_eq!(decode(&hm, &spec).unwrap()[0], Vec3::repeat(spec.center(0, 0)));
    hm.row_mut(1, 0).fill(0.0);
    assert!(decode(&hm, &spec).is_err());
}

#[test]
fn default_range_contains_distant_human() {
    let mut s = rng::seeded(2);
    let base = Vec3::new(20.0, 0.0, 0.0);
    let body: Vec<Vec3> = (0..500)
        .map(|_| base + Vec3::new(s.random_range(-0.3..0.3), s.random_range(-0.4..0.4), s.random_range(-0.95..0.95)))
        .collect();
    let r = default_range(&body).unwrap();
    for p in &body {
        for c in 0..3 {
            assert!(p[c] > r[c][0] && p[c] < r[c][1]);
        }
    }
}

fn random_distribution(s: &mut Stream, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| s.random_range(0.0..1.0f64).powi(3)).collect();
    if s.random_bool(0.2) {
        v[s.random_range(0..n)] = 0.0;
    }
    let total: f64 = v.iter().sum();
    v.iter().map(|x| x / total).collect()
}

#[test]
fn kl_properties() {
    let mut s = rng::seeded(7);
    for _ in 0..1000 {
        let n = s.random_range(2..64);
        let p = random_distribution(&mut s, n);
        let q = random_distribution(&mut s, n);
        assert_eq!(kl_divergence(&p, &p), 0.0);
        assert!(kl_divergence(&p, &q) >= 0.0);
    }
    let v = kl_divergence(&[0.9, 0.1], &[0.5, 0.5]);
    assert!((v - (0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln())).abs() < 1e-9);
    assert!((v - 0.3681).abs() < 1e-4);
}

fn random_triplet(s: &mut Stream, k: usize, bins: [usize; 3]) -> HeatmapTriplet {
    let mut hm = HeatmapTriplet::zeros(k, bins);
    for c in 0..3 {
        for j in 0..k {
            let d = random_distribution(s, bins[c]);
            hm.row_mut(c, j).copy_from_slice(&d);
        }
    }
    hm
}

fn oracle_kl(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        if p[i] > 0.0 {
            total += p[i] * ((p[i] + LOG_EPS).ln() - (q[i] + LOG_EPS).ln());
        }
    }
    total
}

#[test]
fn losses_match_scalar_loops() {
    let mut s = rng::seeded(8);
    for _ in 0..100 {
        let k = s.random_range(1..30);
        let pred: Vec<Vec3> = (0..k).map(|_| Vec3::from_fn(|_, _| s.random_range(-2.0..2.0))).collect();
        let gt: Vec<Vec3> = (0..k).map(|_| Vec3::from_fn(|_, _| s.random_range(-2.0..2.0))).collect();
        let mut vis: Vec<bool> = (0..k).map(|_| s.random_bool(0.7)).collect();
        vis[0] = true;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..k {
            let v = if vis[i] { 1.0 } else { 0.0 };
            let dx = pred[i].x - gt[i].x;
            let dy = pred[i].y - gt[i].y;
            let dz = pred[i].z - gt[i].z;
            num += (dx * dx + dy * dy + dz * dz).sqrt() * v;
            den += v;
        }
        assert!((reg_loss(&pred, &gt, &vis).unwrap() - num / den).abs() < 1e-9);

        let classes = 25;
        let n = s.random_range(1..50);
        let mut probs = Vec::with_capacity(n * classes);
        let mut onehot = vec![0.0; n * classes];
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            probs.extend(random_distribution(&mut s, classes));
            let l = s.random_range(0..classes);
            onehot[i * classes + l] = 1.0;
            labels.push(l as u16);
        }
        let mut ce = 0.0;
        for i in 0..n {
            for j in 0..classes {
                ce -= onehot[i * classes + j] * (probs[i * classes + j] + LOG_EPS).ln();
            }
        }
        assert!((seg_loss(&probs, &onehot, classes).unwrap() - ce).abs() < 1e-9);
        assert!((seg_loss_labels(&probs, &labels, classes).unwrap() - ce).abs() < 1e-9);

        let bins = [s.random_range(2..40), s.random_range(2..40), s.random_range(2..40)];
        let kj = s.random_range(1..5);
        let a = random_triplet(&mut s, kj, bins);
        let b = random_triplet(&mut s, kj, bins);
        let mut expected = 0.0;
        for c in 0..3 {
            for j in 0..kj {
                expected += oracle_kl(b.row(c, j), a.row(c, j));
            }
        }
        assert!((heatmap_loss(&a, &b, KlDirection::GtToPred).unwrap() - expected).abs() < 1e-9);
    }
}

#[test]
fn loss_weights_and_closed_forms() {
    let w = LossWeights::default();
    assert_eq!((w.reg, w.seg), (0.5, 1.0));
    assert_eq!(pretrain_loss(2.0, 3.0, &w), 4.0);
    let n = 7;
    let uniform = vec![1.0 / 25.0; n * 25];
    let labels: Vec<u16> = (0..n as u16).collect();
    assert!((seg_loss_labels(&uniform, &labels, 25).unwrap() - n as f64 * 25f64.ln()).abs() < 1e-9);
    let a = HeatmapTriplet::zeros(2, [4, 4, 4]);
    let b = HeatmapTriplet::zeros(2, [4, 4, 5]);
    assert!(heatmap_loss(&a, &b, KlDirection::GtToPred).is_err());
}
