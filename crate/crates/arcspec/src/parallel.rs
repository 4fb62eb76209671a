//! Rayon-backed executor for matrix assembly and matrix-vector products.
//! Every row is computed independently and written to a disjoint slice, so
//! results are bitwise identical to the serial executor.

use arcspec_core::bs::Executor;
use rayon::prelude::*;

pub struct RayonExec;

impl Executor for RayonExec {
    fn fill_rows(&self, data: &mut [f64], n: usize, f: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        data.par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }

    fn matvec(&self, n: usize, data: &[f64], x: &[f64], y: &mut [f64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = arcspec_core::linalg::dot(&data[i * n..(i + 1) * n], x);
        });
    }
}
