//! Branch-light sine/cosine over slices.
//!
//! The network applies `sin` to every hidden unit of every ray sample, some
//! 10^8 calls per training step, and the libm scalar routine dominates the
//! step time. This kernel does Cody-Waite reduction by pi/2 plus the usual
//! minimax polynomials on [-pi/4, pi/4], written so the loop vectorizes; on
//! x86-64 an AVX2+FMA version is selected at runtime (the portable build
//! targets baseline SSE2, where `floor` is a libcall). Arguments beyond
//! |x| > 1e6 (never produced by the network, whose pre-activations stay
//! small) are patched through the standard library.
//!
//! Accuracy: a few ulp; the unit test pins |diff| < 1e-13 against libm.

const FRAC_2_PI: f64 = 0.636_619_772_367_581_4;
const PIO2_1: f64 = 1.570_796_326_734_125_614_17;
const PIO2_1T: f64 = 6.077_100_506_506_192_249_32e-11;
const PIO2_2T: f64 = 2.022_266_248_795_950_631_54e-21;

const SIN_COEF: [f64; 6] = [
    1.589_623_015_765_465_68e-10,
    -2.505_074_776_285_780_73e-8,
    2.755_731_362_138_572_45e-6,
    -1.984_126_982_958_953_86e-4,
    8.333_333_333_322_118_59e-3,
    -1.666_666_666_666_663_07e-1,
];

const COS_COEF: [f64; 6] = [
    -1.135_853_652_138_768_17e-11,
    2.087_570_084_197_473_17e-9,
    -2.755_731_417_929_673_88e-7,
    2.480_158_728_885_171_80e-5,
    -1.388_888_888_887_305_64e-3,
    4.166_666_666_666_659_29e-2,
];

#[inline(always)]
fn poly5(z: f64, c: &[f64; 6]) -> f64 {
    ((((c[0] * z + c[1]) * z + c[2]) * z + c[3]) * z + c[4]) * z + c[5]
}

#[inline(always)]
fn sincos_reduced(x: f64) -> (f64, f64) {
    // floor-based nearest (ties biased up): a single rounding instruction,
    // unlike round-half-away-from-zero
    let k = (x * FRAC_2_PI + 0.5).floor();
    let r = ((x - k * PIO2_1) - k * PIO2_1T) - k * PIO2_2T;
    let z = r * r;
    let s = r + r * z * poly5(z, &SIN_COEF);
    let c = 1.0 - 0.5 * z + z * z * poly5(z, &COS_COEF);
    // quadrant bits of the integer-valued k in float arithmetic, keeping the
    // loop free of int casts so it vectorizes
    let kh = (k * 0.5).floor();
    let m2 = k - 2.0 * kh; // bit 0
    let m4 = kh - 2.0 * (kh * 0.5).floor(); // bit 1
    let swap = m2 != 0.0;
    let sv = if swap { c } else { s };
    let cv = if swap { s } else { c };
    let ssign = 1.0 - 2.0 * m4;
    let csign = 1.0 - 2.0 * (m2 + m4 - 2.0 * m2 * m4);
    (ssign * sv, csign * cv)
}

#[inline(always)]
fn kernel(xs: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
    let n = xs.len();
    for i in 0..n {
        let (s, c) = sincos_reduced(xs[i]);
        sin_out[i] = s;
        cos_out[i] = c;
    }
    // rare huge arguments fall back to libm
    for i in 0..n {
        if xs[i].abs() > 1e6 {
            let (s, c) = xs[i].sin_cos();
            sin_out[i] = s;
            cos_out[i] = c;
        }
    }
}

#[inline(always)]
fn kernel_inplace(buf: &mut [f64], cos_out: &mut [f64]) {
    let n = buf.len();
    for i in 0..n {
        let x = buf[i];
        let (s, c) = sincos_reduced(x);
        cos_out[i] = c;
        // huge arguments keep their value as a sentinel (any sin is <= 1)
        buf[i] = if x.abs() > 1e6 { x } else { s };
    }
    for i in 0..n {
        if buf[i].abs() > 1e6 {
            let (s, c) = buf[i].sin_cos();
            buf[i] = s;
            cos_out[i] = c;
        }
    }
}

fn kernel_generic(xs: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
    kernel(xs, sin_out, cos_out);
}

fn kernel_inplace_generic(buf: &mut [f64], cos_out: &mut [f64]) {
    kernel_inplace(buf, cos_out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn kernel_avx2(xs: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
    kernel(xs, sin_out, cos_out);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn kernel_inplace_avx2(buf: &mut [f64], cos_out: &mut [f64]) {
    kernel_inplace(buf, cos_out);
}

type Kernel = fn(&[f64], &mut [f64], &mut [f64]);
type KernelInPlace = fn(&mut [f64], &mut [f64]);

fn pick_kernels() -> (Kernel, KernelInPlace) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") && std::arch::is_x86_feature_detected!("fma") {
            // SAFETY: dispatched only when the features are present
            return (
                |xs, s, c| unsafe { kernel_avx2(xs, s, c) },
                |b, c| unsafe { kernel_inplace_avx2(b, c) },
            );
        }
    }
    (kernel_generic, kernel_inplace_generic)
}

fn dispatch() -> (Kernel, KernelInPlace) {
    use std::sync::OnceLock;
    static KERNELS: OnceLock<(Kernel, KernelInPlace)> = OnceLock::new();
    *KERNELS.get_or_init(pick_kernels)
}

/// `sin` and `cos` of each input, written to the two output slices.
pub fn sincos_slice(xs: &[f64], sin_out: &mut [f64], cos_out: &mut [f64]) {
    assert_eq!(xs.len(), sin_out.len());
    assert_eq!(xs.len(), cos_out.len());
    dispatch().0(xs, sin_out, cos_out);
}

/// In-place variant: `buf` becomes `sin(buf)`, `cos_out` receives `cos`.
pub fn sincos_in_place(buf: &mut [f64], cos_out: &mut [f64]) {
    assert_eq!(buf.len(), cos_out.len());
    dispatch().1(buf, cos_out);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_libm_over_working_range() {
        let mut worst = 0.0f64;
        let mut x = -5000.0;
        while x < 5000.0 {
            let (s, c) = sincos_reduced(x);
            let (s0, c0) = x.sin_cos();
            worst = worst.max((s - s0).abs()).max((c - c0).abs());
            x += 0.000_137;
        }
        assert!(worst < 1e-13, "worst deviation {worst:e}");
    }

    #[test]
    fn slice_and_in_place_agree_with_libm() {
        let xs: Vec<f64> = (0..4097).map(|i| (i as f64) * 0.77 - 1500.0).collect();
        let mut s = vec![0.0; xs.len()];
        let mut c = vec![0.0; xs.len()];
        sincos_slice(&xs, &mut s, &mut c);
        let mut buf = xs.clone();
        let mut c2 = vec![0.0; xs.len()];
        sincos_in_place(&mut buf, &mut c2);
        for i in 0..xs.len() {
            assert!((s[i] - xs[i].sin()).abs() < 1e-13);
            assert!((c[i] - xs[i].cos()).abs() < 1e-13);
            assert_eq!(s[i], buf[i]);
            assert_eq!(c[i], c2[i]);
        }
    }

    #[test]
    fn large_arguments_fall_back_to_libm() {
        let xs = [1.0e7, -3.4e9, 2.0e6 + 0.25];
        let mut s = [0.0; 3];
        let mut c = [0.0; 3];
        sincos_slice(&xs, &mut s, &mut c);
        for i in 0..3 {
            assert_eq!(s[i], xs[i].sin());
            assert_eq!(c[i], xs[i].cos());
        }
    }
}
