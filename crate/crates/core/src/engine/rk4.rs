//! Classical fourth-order Runge-Kutta over a flat complex state vector.

use num_complex::Complex64 as C64;

/// Reusable stage buffers for [`Rk4::step`].
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(len: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); len];
        Self { k1: z.clone(), k2: z.clone(), k3: z.clone(), k4: z.clone(), tmp: z }
    }

    pub fn len(&self) -> usize {
        self.k1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k1.is_empty()
    }

    /// Advances `y` from `t` to `t + h`; `f(t, y, dy)` writes `dy/dt`.
    pub fn step<F>(&mut self, mut f: F, t: f64, h: f64, y: &mut [C64])
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        debug_assert_eq!(y.len(), self.len());
        let half = 0.5 * h;
        f(t, y, &mut self.k1);
        axpy(&mut self.tmp, y, half, &self.k1);
        f(t + half, &self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, half, &self.k2);
        f(t + half, &self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, h, &self.k3);
        f(t + h, &self.tmp, &mut self.k4);
        let w = h / 6.0;
        for i in 0..y.len() {
            y[i] += w * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

fn axpy(out: &mut [C64], y: &[C64], a: f64, k: &[C64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_is_fourth_order() {
        let f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = C64::new(-1.0, 2.0) * y[0];
        let run = |h: f64| {
            let mut rk = Rk4::new(1);
            let mut y = [C64::new(1.0, 0.0)];
            let n = (1.0 / h).round() as usize;
            for i in 0..n {
                rk.step(f, i as f64 * h, h, &mut y);
            }
            (y[0] - C64::new(-1.0, 2.0).exp()).norm()
        };
        let (e1, e2) = (run(0.02), run(0.01));
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn integrates_polynomials_in_time_exactly() {
        // y' = t³ is integrated exactly by Simpson weights.
        let mut rk = Rk4::new(1);
        let mut y = [C64::new(0.0, 0.0)];
        rk.step(|t, _y, dy| dy[0] = C64::new(t * t * t, 0.0), 0.0, 2.0, &mut y);
        assert!((y[0].re - 4.0).abs() < 1e-14);
    }
}
