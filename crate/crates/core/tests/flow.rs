mod common;

use common::{shift_recovery, texture, BORDER};
use stereosync::opticalflow::{farneback_flow, FlowParams};

#[test]
fn zero_motion_gives_near_zero_flow() {
    let f = texture(64, 3, 0.0, 0.0);
    let flow = farneback_flow(&f, &f, &FlowParams::default()).unwrap();
    assert!(flow.dx.iter().chain(&flow.dy).all(|v| v.abs() < 0.05));
}

#[test]
fn integer_shifts_are_recovered() {
    for (sx, sy) in [
        (3.0, 0.0),
        (-3.0, 0.0),
        (0.0, 2.0),
        (-2.0, 1.0),
        (2.0, -2.0),
        (0.0, -3.0),
    ] {
        for seed in 0..3 {
            let frac = shift_recovery(64, sx, sy, seed);
            assert!(frac >= 0.9, "shift ({sx}, {sy}) seed {seed}: {frac}");
        }
    }
}

#[test]
fn backward_flow_is_roughly_negated_forward_flow() {
    let a = texture(64, 9, 0.0, 0.0);
    let b = texture(64, 9, 2.0, -1.0);
    let fwd = farneback_flow(&a, &b, &FlowParams::default()).unwrap();
    let bwd = farneback_flow(&b, &a, &FlowParams::default()).unwrap();
    let mut err = 0.0;
    let mut n = 0.0;
    for y in BORDER..64 - BORDER {
        for x in BORDER..64 - BORDER {
            let (fx, fy) = fwd.at(x, y);
            let (bx, by) = bwd.at(x, y);
            err += (fx + bx).hypot(fy + by);
            n += 1.0;
        }
    }
    assert!(err / n < 0.3, "mean |fwd + bwd| = {}", err / n);
}
