//! Complex FFT for arbitrary lengths.
//!
//! Power-of-two sizes use an iterative radix-2 transform; every other size
//! goes through Bluestein's chirp-z algorithm on a padded power-of-two plan.
//! The forward transform is unnormalized, the inverse divides by `n`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

#[derive(Debug)]
pub struct FftPlan {
    n: usize,
    kind: Kind,
}

#[derive(Debug)]
enum Kind {
    Radix2(Radix2),
    Bluestein(Box<Bluestein>),
}

#[derive(Debug)]
struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
}

#[derive(Debug)]
struct Bluestein {
    inner: Radix2,
    chirp: Vec<Complex64>,
    filter: Vec<Complex64>,
}

fn cis(theta: f64) -> Complex64 {
    Complex64::new(libm::cos(theta), libm::sin(theta))
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| cis(-2.0 * PI * k as f64 / n as f64))
            .collect();
        Radix2 { n, twiddles }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.n;
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for j in 0..half {
                    let w = self.twiddles[j * stride];
                    let u = buf[start + j];
                    let v = buf[start + j + half] * w;
                    buf[start + j] = u + v;
                    buf[start + j + half] = u - v;
                }
            }
            len <<= 1;
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k^2 mod 2n keeps the chirp phase small for large k.
        let chirp: Vec<Complex64> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                cis(-PI * k2 / n as f64)
            })
            .collect();
        let mut filter = vec![Complex64::new(0.0, 0.0); m];
        filter[0] = chirp[0].conj();
        for k in 1..n {
            filter[k] = chirp[k].conj();
            filter[m - k] = chirp[k].conj();
        }
        inner.forward(&mut filter);
        Bluestein {
            inner,
            chirp,
            filter,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.chirp.len();
        let m = self.inner.n;
        let mut work = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (w, f) in work.iter_mut().zip(&self.filter) {
            *w = (*w * f).conj();
        }
        // inverse via conjugation: ifft(x) = conj(fft(conj(x))) / m
        self.inner.forward(&mut work);
        let scale = 1.0 / m as f64;
        for k in 0..n {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

impl FftPlan {
    pub fn new(n: usize) -> Self {
        let kind = if n.is_power_of_two() {
            Kind::Radix2(Radix2::new(n))
        } else {
            Kind::Bluestein(Box::new(Bluestein::new(n)))
        };
        FftPlan { n, kind }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// In-place forward transform, `X_k = Σ x_j e^{-2πi jk/n}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match the plan");
        match &self.kind {
            Kind::Radix2(p) => p.forward(buf),
            Kind::Bluestein(p) => p.forward(buf),
        }
    }

    /// In-place inverse transform, normalized by `1/n`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        for z in buf.iter_mut() {
            *z = z.conj();
        }
        self.forward(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z = z.conj() * scale;
        }
    }
}
