//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7K15 panel: (kronrod estimate, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    let mut panels = 0usize;
    while let Some((lo, hi, tol_here, depth)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        panels += 1;
        if !val.is_finite() {
            return Err(Error::NonConvergence(format!(
                "non-finite integrand on [{lo}, {hi}]"
            )));
        }
        if err <= tol_here || (hi - lo).abs() <= 1e-12 * (1.0 + lo.abs()) {
            total += val;
            continue;
        }
        if depth >= 60 || panels > 200_000 {
            return Err(Error::NonConvergence(format!(
                "tolerance {tol_here:e} not met on [{lo}, {hi}] (error {err:e})"
            )));
        }
        let mid = 0.5 * (lo + hi);
        stack.push((mid, hi, 0.5 * tol_here, depth + 1));
        stack.push((lo, mid, 0.5 * tol_here, depth + 1));
    }
    Ok(total)
}

/// Fixed 5-point Gauss-Legendre rule, used for short panels in hot loops.
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const X: [f64; 3] = [0.0, 0.538_469_310_105_683_1, 0.906_179_845_938_664_0];
    const W: [f64; 3] = [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = W[0] * f(c);
    for j in 1..3 {
        s += W[j] * (f(c - h * X[j]) + f(c + h * X[j]));
    }
    s * h
}
