//! Shared 3D FFT machinery: cached rustfft plans and line-parallel axis
//! passes over x-fastest arrays. Raw transforms here are unnormalized; the
//! physical normalization lives in [`crate::field`].

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plan_cache() -> &'static Mutex<HashMap<usize, PlanPair>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub(crate) fn plans(n: usize) -> PlanPair {
    let mut cache = plan_cache().lock().unwrap();
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// In-place unnormalized forward DFT along all three axes of an n^3 array.
pub(crate) fn forward3(values: &mut [Complex64], n: usize) {
    let (fwd, _) = plans(n);
    all_axes(values, n, fwd);
}

/// In-place unnormalized inverse DFT (no 1/n^3) along all three axes.
pub(crate) fn inverse3(values: &mut [Complex64], n: usize) {
    let (_, inv) = plans(n);
    all_axes(values, n, inv);
}

fn all_axes(values: &mut [Complex64], n: usize, fft: Arc<dyn Fft<f64>>) {
    assert_eq!(values.len(), n * n * n);
    axis_x(values, n, &fft);
    axis_y(values, n, &fft);
    axis_z(values, n, &fft);
}

fn axis_x(values: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    values.par_chunks_exact_mut(n).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, line| fft.process_with_scratch(line, scratch),
    );
}

/// y-lines have stride n and live inside one xy-plane, so each n^2 slab can
/// be handed to a task wholesale.
fn axis_y(values: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    values.par_chunks_exact_mut(n * n).for_each_init(
        || {
            (
                vec![Complex64::default(); n],
                vec![Complex64::default(); scratch_len],
            )
        },
        |(line, scratch), plane| {
            for ix in 0..n {
                for iy in 0..n {
                    line[iy] = plane[ix + n * iy];
                }
                fft.process_with_scratch(line, scratch);
                for iy in 0..n {
                    plane[ix + n * iy] = line[iy];
                }
            }
        },
    );
}

#[derive(Clone, Copy)]
struct SendPtr(*mut Complex64);
unsafe impl Send for SendPtr {}
unsafe impl Sync for SendPtr {}

/// z-lines (stride n^2) interleave across the whole array, so slab chunking
/// cannot express them; tasks are split by iy instead. Distinct iy values
/// touch disjoint index sets {ix + n*iy + n^2*iz}, which keeps the raw-pointer
/// writes race-free.
fn axis_z(values: &mut [Complex64], n: usize, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    let base = SendPtr(values.as_mut_ptr());
    let nn = n * n;
    (0..n).into_par_iter().for_each_init(
        || {
            (
                vec![Complex64::default(); n],
                vec![Complex64::default(); scratch_len],
            )
        },
        |(line, scratch), iy| {
            let p = base;
            for ix in 0..n {
                let start = ix + n * iy;
                unsafe {
                    for iz in 0..n {
                        line[iz] = *p.0.add(start + nn * iz);
                    }
                }
                fft.process_with_scratch(line, scratch);
                unsafe {
                    for iz in 0..n {
                        *p.0.add(start + nn * iz) = line[iz];
                    }
                }
            }
        },
    );
}

/// Deterministic parallel sum: fixed-size chunks are reduced in parallel and
/// the partial sums folded in index order, so results do not depend on thread
/// scheduling.
pub(crate) fn det_sum<T, F>(len: usize, f: F) -> T
where
    T: Send + Copy + Default + std::ops::Add<Output = T>,
    F: Fn(usize) -> T + Sync,
{
    const CHUNK: usize = 8192;
    let nchunks = len.div_ceil(CHUNK);
    let partials: Vec<T> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(len);
            let mut acc = T::default();
            for i in lo..hi {
                acc = acc + f(i);
            }
            acc
        })
        .collect();
    partials.into_iter().fold(T::default(), |a, b| a + b)
}
