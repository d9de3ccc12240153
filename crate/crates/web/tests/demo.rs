use snn_web::demo::{encode, rule, stdp_window, threshold_trace};

#[test]
fn encoding_of_a_bar() {
    let (w, h) = (28, 28);
    let mut px = vec![0.0; w * h];
    for x in 6..22 {
        px[14 * w + x] = 1.0;
    }
    let e = encode(&px, w, h).unwrap();
    assert_eq!(e.latencies.len(), 2 * w * h);
    assert_eq!(e.latencies.iter().filter(|t| !t.is_nan()).count(), e.spikes);
    // the strongest contrast spikes at the start of the window
    let first = e.latencies.iter().cloned().filter(|t| !t.is_nan()).fold(f64::INFINITY, f64::min);
    assert_eq!(first, 0.0);
    assert!(e.on.iter().chain(&e.off).all(|v| (0.0..=1.0).contains(v)));
    assert_eq!(e.on.iter().chain(&e.off).cloned().fold(0.0, f64::max), 1.0);
    // blank image: nothing to encode
    assert_eq!(encode(&vec![0.0; w * h], w, h).unwrap().spikes, 0);
    assert!(encode(&px[1..], w, h).is_err());
}

#[test]
fn additive_window_is_a_step() {
    let r = rule("additive", 0.1, 0.0).unwrap();
    let v = stdp_window(&r, 0.5, 0.5, 11);
    assert_eq!(v.len(), 12);
    assert!(v[..6].iter().all(|&d| d == 0.1));
    assert!(v[6..].iter().all(|&d| d == -0.1));
    assert!(rule("hebbian", 0.1, 0.0).is_err());
    assert!(rule("biological", 0.1, 0.0).is_err());
}

#[test]
fn trace_has_one_point_per_epoch() {
    let t = threshold_trace(0.5, true, 30, 1).unwrap();
    assert_eq!(t.means.len(), 30);
    assert_eq!(t.shares.len(), 4);
    assert!((t.shares.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!((t.means[29] - 0.5).abs() < 0.1, "{:?}", t.means);
}
