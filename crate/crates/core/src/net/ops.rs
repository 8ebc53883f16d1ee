//! Dense tensor kernels for the untrained forward pass.
//!
//! Everything operates on NCHW `f64` arrays. Convolution lowers each
//! sample to an im2col matrix and multiplies; the rest are plain loops.
//! All kernels are single-threaded and reduce in a fixed order, so a
//! forward pass is bit-reproducible regardless of caller parallelism.

use ndarray::{Array2, Array4, ArrayView4, ArrayViewMut4};

/// Output spatial size for a conv/pool sliding window.
pub fn out_len(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// 2-D convolution; `weight` is (out_ch, in_ch, kh, kw), `bias` one value
/// per output channel.
pub fn conv2d(
    input: &ArrayView4<f64>,
    weight: &Array4<f64>,
    bias: Option<&[f64]>,
    stride: usize,
    pad: usize,
) -> Array4<f64> {
    let (batch, in_ch, h, w) = dims(input);
    let (out_ch, w_in_ch, kh, kw) = {
        let s = weight.shape();
        (s[0], s[1], s[2], s[3])
    };
    assert_eq!(in_ch, w_in_ch, "channel mismatch");
    let oh = out_len(h, kh, stride, pad);
    let ow = out_len(w, kw, stride, pad);

    // (out_ch, in_ch*kh*kw) with rows contiguous.
    let wmat = weight
        .view()
        .into_shape_with_order((out_ch, in_ch * kh * kw))
        .expect("weight is contiguous")
        .to_owned();

    let mut output = Array4::zeros((batch, out_ch, oh, ow));
    let mut cols = Array2::<f64>::zeros((in_ch * kh * kw, oh * ow));
    let input_slice = input.as_slice().expect("input is standard layout");
    for b in 0..batch {
        im2col(
            &input_slice[b * in_ch * h * w..(b + 1) * in_ch * h * w],
            in_ch,
            h,
            w,
            kh,
            kw,
            stride,
            pad,
            &mut cols,
        );
        // (out_ch, k) x (k, oh*ow) -> (out_ch, oh*ow)
        let prod = wmat.dot(&cols);
        let mut out_b = output.index_axis_mut(ndarray::Axis(0), b);
        let out_slice = out_b.as_slice_mut().expect("output is standard layout");
        out_slice.copy_from_slice(prod.as_slice().expect("product is contiguous"));
        if let Some(bias) = bias {
            for (chunk, add) in out_slice.chunks_exact_mut(oh * ow).zip(bias.iter().copied()) {
                for v in chunk {
                    *v += add;
                }
            }
        }
    }
    output
}

/// Lowers one CHW sample into (in_ch*kh*kw, oh*ow) patch columns,
/// zero-padding out-of-range taps.
#[allow(clippy::too_many_arguments)]
fn im2col(
    sample: &[f64],
    in_ch: usize,
    h: usize,
    w: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    cols: &mut Array2<f64>,
) {
    let oh = out_len(h, kh, stride, pad);
    let ow = out_len(w, kw, stride, pad);
    let out = cols.as_slice_mut().expect("cols is standard layout");
    for ci in 0..in_ch {
        let plane = &sample[ci * h * w..(ci + 1) * h * w];
        for ki in 0..kh {
            for kj in 0..kw {
                let row = (ci * kh + ki) * kw + kj;
                let dst = &mut out[row * oh * ow..(row + 1) * oh * ow];
                for oi in 0..oh {
                    let ih = (oi * stride + ki) as isize - pad as isize;
                    if ih < 0 || ih >= h as isize {
                        dst[oi * ow..(oi + 1) * ow].fill(0.0);
                        continue;
                    }
                    let src_row = &plane[ih as usize * w..(ih as usize + 1) * w];
                    for oj in 0..ow {
                        let iw = (oj * stride + kj) as isize - pad as isize;
                        dst[oi * ow + oj] = if iw < 0 || iw >= w as isize {
                            0.0
                        } else {
                            src_row[iw as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Batch normalization with the current batch's statistics: per channel,
/// subtract the mean over (batch, h, w) and divide by the population
/// standard deviation stabilized by `eps`. Scale and shift stay at 1 / 0
/// for an untrained network.
pub fn batch_norm(x: &mut ArrayViewMut4<f64>, eps: f64) {
    let (batch, ch, h, w) = dims(&x.view());
    let count = (batch * h * w) as f64;
    for c in 0..ch {
        let mut sum = 0.0;
        for b in 0..batch {
            for i in 0..h {
                for j in 0..w {
                    sum += x[[b, c, i, j]];
                }
            }
        }
        let mean = sum / count;
        let mut sq = 0.0;
        for b in 0..batch {
            for i in 0..h {
                for j in 0..w {
                    let d = x[[b, c, i, j]] - mean;
                    sq += d * d;
                }
            }
        }
        let inv = 1.0 / (sq / count + eps).sqrt();
        for b in 0..batch {
            for i in 0..h {
                for j in 0..w {
                    x[[b, c, i, j]] = (x[[b, c, i, j]] - mean) * inv;
                }
            }
        }
    }
}

pub fn relu(x: &mut ArrayViewMut4<f64>) {
    x.mapv_inplace(|v| v.max(0.0));
}

/// Average pooling. Padded taps never count toward the divisor
/// (count_include_pad = false).
pub fn avg_pool(input: &ArrayView4<f64>, kernel: usize, stride: usize, pad: usize) -> Array4<f64> {
    let (batch, ch, h, w) = dims(input);
    let oh = out_len(h, kernel, stride, pad);
    let ow = out_len(w, kernel, stride, pad);
    let mut output = Array4::zeros((batch, ch, oh, ow));
    for b in 0..batch {
        for c in 0..ch {
            for oi in 0..oh {
                for oj in 0..ow {
                    let mut sum = 0.0;
                    let mut n = 0u32;
                    for ki in 0..kernel {
                        let ih = (oi * stride + ki) as isize - pad as isize;
                        if ih < 0 || ih >= h as isize {
                            continue;
                        }
                        for kj in 0..kernel {
                            let iw = (oj * stride + kj) as isize - pad as isize;
                            if iw < 0 || iw >= w as isize {
                                continue;
                            }
                            sum += input[[b, c, ih as usize, iw as usize]];
                            n += 1;
                        }
                    }
                    output[[b, c, oi, oj]] = sum / n as f64;
                }
            }
        }
    }
    output
}

/// Per-channel spatial mean: (batch, ch, h, w) -> (batch, ch).
pub fn global_avg_pool(input: &ArrayView4<f64>) -> Array2<f64> {
    let (batch, ch, h, w) = dims(input);
    let mut out = Array2::zeros((batch, ch));
    let denom = (h * w) as f64;
    for b in 0..batch {
        for c in 0..ch {
            let mut sum = 0.0;
            for i in 0..h {
                for j in 0..w {
                    sum += input[[b, c, i, j]];
                }
            }
            out[[b, c]] = sum / denom;
        }
    }
    out
}

fn dims(x: &ArrayView4<f64>) -> (usize, usize, usize, usize) {
    let s = x.shape();
    (s[0], s[1], s[2], s[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use ndarray::Array4;

    fn random_tensor(shape: (usize, usize, usize, usize), rng: &mut CounterRng) -> Array4<f64> {
        Array4::from_shape_simple_fn(shape, || rng.uniform(-1.0, 1.0))
    }

    // Direct seven-loop convolution, the oracle for the im2col path.
    fn conv2d_naive(
        input: &Array4<f64>,
        weight: &Array4<f64>,
        bias: Option<&[f64]>,
        stride: usize,
        pad: usize,
    ) -> Array4<f64> {
        let (batch, in_ch, h, w) = {
            let s = input.shape();
            (s[0], s[1], s[2], s[3])
        };
        let (out_ch, _, kh, kw) = {
            let s = weight.shape();
            (s[0], s[1], s[2], s[3])
        };
        let oh = out_len(h, kh, stride, pad);
        let ow = out_len(w, kw, stride, pad);
        let mut out = Array4::zeros((batch, out_ch, oh, ow));
        for b in 0..batch {
            for oc in 0..out_ch {
                for oi in 0..oh {
                    for oj in 0..ow {
                        let mut sum = bias.map_or(0.0, |bs| bs[oc]);
                        for ci in 0..in_ch {
                            for ki in 0..kh {
                                for kj in 0..kw {
                                    let ih = (oi * stride + ki) as isize - pad as isize;
                                    let iw = (oj * stride + kj) as isize - pad as isize;
                                    if ih >= 0 && iw >= 0 && ih < h as isize && iw < w as isize {
                                        sum += input[[b, ci, ih as usize, iw as usize]]
                                            * weight[[oc, ci, ki, kj]];
                                    }
                                }
                            }
                        }
                        out[[b, oc, oi, oj]] = sum;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn conv_matches_naive_oracle() {
        let mut rng = CounterRng::new(5);
        let cases = [
            ((2, 3, 8, 8), (4, 3, 3, 3), 1, 1),
            ((3, 2, 7, 9), (5, 2, 3, 3), 2, 1),
            ((2, 4, 6, 6), (3, 4, 1, 1), 1, 0),
            ((2, 1, 5, 5), (2, 1, 3, 3), 1, 0),
        ];
        for (ishape, wshape, stride, pad) in cases {
            let input = random_tensor(ishape, &mut rng);
            let weight = random_tensor(wshape, &mut rng);
            let bias: Vec<f64> = (0..wshape.0).map(|_| rng.uniform(-0.5, 0.5)).collect();
            let got = conv2d(&input.view(), &weight, Some(&bias), stride, pad);
            let want = conv2d_naive(&input, &weight, Some(&bias), stride, pad);
            assert_eq!(got.shape(), want.shape());
            for (g, w) in got.iter().zip(want.iter()) {
                assert!((g - w).abs() < 1e-12, "conv mismatch: {g} vs {w}");
            }
        }
    }

    #[test]
    fn batch_norm_zero_mean_unit_var() {
        let mut rng = CounterRng::new(9);
        let mut x = random_tensor((4, 3, 5, 5), &mut rng);
        batch_norm(&mut x.view_mut(), 1e-5);
        for c in 0..3 {
            let vals: Vec<f64> = (0..4)
                .flat_map(|b| {
                    (0..5).flat_map(move |i| (0..5).map(move |j| (b, i, j)))
                })
                .map(|(b, i, j)| x[[b, c, i, j]])
                .collect();
            let mean: f64 = vals.iter().sum::<f64>() / vals.len() as f64;
            let var: f64 = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn batch_norm_handles_constant_channel() {
        let mut x = Array4::from_elem((3, 2, 4, 4), 7.0);
        batch_norm(&mut x.view_mut(), 1e-5);
        assert!(x.iter().all(|v| v.is_finite() && v.abs() < 1e-9));
    }

    #[test]
    fn avg_pool_excludes_padding_from_divisor() {
        // 3x3 input of ones with 3x3 kernel, stride 1, pad 1: every
        // output is exactly 1 only when padded taps are excluded.
        let x = Array4::from_elem((2, 1, 3, 3), 1.0);
        let y = avg_pool(&x.view(), 3, 1, 1);
        assert_eq!(y.shape(), &[2, 1, 3, 3]);
        for v in y.iter() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn avg_pool_downsamples() {
        let mut x = Array4::zeros((1, 1, 4, 4));
        for i in 0..4 {
            for j in 0..4 {
                x[[0, 0, i, j]] = (i * 4 + j) as f64;
            }
        }
        let y = avg_pool(&x.view(), 2, 2, 0);
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y[[0, 0, 0, 0]], (0.0 + 1.0 + 4.0 + 5.0) / 4.0);
        assert_eq!(y[[0, 0, 1, 1]], (10.0 + 11.0 + 14.0 + 15.0) / 4.0);
    }

    #[test]
    fn gap_averages_each_channel() {
        let mut x = Array4::zeros((2, 2, 2, 2));
        x[[1, 1, 0, 0]] = 4.0;
        let y = global_avg_pool(&x.view());
        assert_eq!(y[[1, 1]], 1.0);
        assert_eq!(y[[0, 0]], 0.0);
    }
}
