//! Closed-form 2x2 Hermitian generalized eigensolver.
//!
//! `solve_gevd(v1, v2)` returns the principal solution of
//! `V1 w = lambda (V2 + eps I) w`. The ridge `eps` is tied to the trace of
//! the denominator matrix so near-singular inputs stay solvable, and the
//! eigenvalue comes from the characteristic quadratic, which is exact for
//! the 2x2 case.

use crate::C64;

/// Relative ridge applied to the denominator matrix, scaled by its mean
/// diagonal.
pub const RIDGE_RELATIVE: f64 = 1e-6;

/// Absolute ridge floor used when the denominator trace is negligible.
pub const RIDGE_ABSOLUTE: f64 = 1e-12;

/// Numerator traces at or below this count as a degenerate problem.
pub const DEGENERATE_TRACE: f64 = 1e-12;

/// Hermitian 2x2 matrix: real diagonal `(d0, d1)`, upper off-diagonal
/// `off`, lower implied as its conjugate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Herm2 {
    pub d0: f64,
    pub d1: f64,
    pub off: C64,
}

impl Herm2 {
    pub fn zero() -> Self {
        Self {
            d0: 0.0,
            d1: 0.0,
            off: C64::new(0.0, 0.0),
        }
    }

    pub fn identity() -> Self {
        Self {
            d0: 1.0,
            d1: 1.0,
            off: C64::new(0.0, 0.0),
        }
    }

    /// `weight * x x^H` for a two-channel sample `x`.
    pub fn outer(x: [C64; 2], weight: f64) -> Self {
        Self {
            d0: weight * x[0].norm_sqr(),
            d1: weight * x[1].norm_sqr(),
            off: x[0] * x[1].conj() * weight,
        }
    }

    pub fn trace(&self) -> f64 {
        self.d0 + self.d1
    }

    pub fn det(&self) -> f64 {
        self.d0 * self.d1 - self.off.norm_sqr()
    }

    pub fn add_scaled(&mut self, other: &Self, s: f64) {
        self.d0 += s * other.d0;
        self.d1 += s * other.d1;
        self.off += other.off * s;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            d0: self.d0 * s,
            d1: self.d1 * s,
            off: self.off * s,
        }
    }

    /// Convex blend `(1 - beta) * inst + beta * self`, the one-pole frame
    /// smoother used by the covariance tracker.
    pub fn smoothed(&self, inst: &Self, beta: f64) -> Self {
        let mut out = inst.scaled(1.0 - beta);
        out.add_scaled(self, beta);
        out
    }

    pub fn mat_vec(&self, w: [C64; 2]) -> [C64; 2] {
        [
            w[0] * self.d0 + self.off * w[1],
            self.off.conj() * w[0] + w[1] * self.d1,
        ]
    }

    /// Real quadratic form `w^H M w`.
    pub fn quad(&self, w: [C64; 2]) -> f64 {
        let mv = self.mat_vec(w);
        (w[0].conj() * mv[0] + w[1].conj() * mv[1]).re
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GevdSolution {
    /// Unit-norm principal generalized eigenvector, phase-canonicalized so
    /// its largest entry is real and nonnegative.
    pub w: [C64; 2],
    /// Largest generalized eigenvalue.
    pub lambda: f64,
    /// Smaller generalized eigenvalue. A ratio `lambda / lambda_min` near 1
    /// means the pencil is close to proportional and the eigenvector
    /// direction carries no information.
    pub lambda_min: f64,
    /// Set when the numerator matrix was negligible and `w = [1, 0]`,
    /// `lambda = 0` was returned instead of a solve.
    pub degenerate: bool,
}

/// Ridge used by [`solve_gevd`] for a given denominator matrix.
pub fn ridge_for(den: &Herm2) -> f64 {
    (RIDGE_RELATIVE * den.trace() / 2.0).max(RIDGE_ABSOLUTE)
}

fn canonicalize(w: [C64; 2]) -> [C64; 2] {
    let norm = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
    if norm == 0.0 {
        return [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    }
    let lead = if w[0].norm() >= w[1].norm() { w[0] } else { w[1] };
    let phase = if lead.norm() > 0.0 {
        lead / lead.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let scale = phase.conj() / norm;
    [w[0] * scale, w[1] * scale]
}

/// Principal solution of `num w = lambda (den + eps I) w`, maximizing the
/// ratio of the quadratic form in `num` over the one in `den`.
pub fn solve_gevd(num: &Herm2, den: &Herm2) -> GevdSolution {
    if num.trace() <= DEGENERATE_TRACE {
        return GevdSolution {
            w: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            lambda: 0.0,
            lambda_min: 0.0,
            degenerate: true,
        };
    }
    let eps = ridge_for(den);
    let b = Herm2 {
        d0: den.d0 + eps,
        d1: den.d1 + eps,
        off: den.off,
    };
    // det(A - lambda B) = det(B) lambda^2 - m lambda + det(A) with
    // m = a0 b1 + a1 b0 - 2 Re(a_off conj(b_off)).
    let det_b = b.det();
    let m = num.d0 * b.d1 + num.d1 * b.d0 - 2.0 * (num.off * b.off.conj()).re;
    let disc = (m * m - 4.0 * num.det() * det_b).max(0.0);
    let lambda = (m + disc.sqrt()) / (2.0 * det_b);
    let lambda_min = (m - disc.sqrt()) / (2.0 * det_b);

    // Null vector of M = A - lambda B, taken from the better-scaled row.
    let m00 = num.d0 - lambda * b.d0;
    let m11 = num.d1 - lambda * b.d1;
    let moff = num.off - b.off * lambda;
    let row0 = m00 * m00 + moff.norm_sqr();
    let row1 = m11 * m11 + moff.norm_sqr();
    let w = if row0 >= row1 && row0 > 0.0 {
        [moff, C64::new(-m00, 0.0)]
    } else if row1 > 0.0 {
        [C64::new(m11, 0.0), -moff.conj()]
    } else {
        // A is exactly proportional to B: every direction is principal.
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
    };
    GevdSolution {
        w: canonicalize(w),
        lambda,
        lambda_min,
        degenerate: false,
    }
}

/// Rayleigh quotient `w^H num w / w^H (den + eps I) w` with the same ridge
/// as [`solve_gevd`].
pub fn rayleigh(num: &Herm2, den: &Herm2, w: [C64; 2]) -> f64 {
    let eps = ridge_for(den);
    let b = Herm2 {
        d0: den.d0 + eps,
        d1: den.d1 + eps,
        off: den.off,
    };
    num.quad(w) / b.quad(w)
}

/// Rescale `w` so the filter passes a source with steering vector `s`
/// untouched: `w' = w / (s^H w)`, giving `w'^H s = 1`. `None` when the
/// filter nulls the steering direction.
pub fn normalize_distortionless(w: [C64; 2], s: [C64; 2]) -> Option<[C64; 2]> {
    let alpha = s[0].conj() * w[0] + s[1].conj() * w[1];
    if alpha.norm() < 1e-12 {
        return None;
    }
    Some([w[0] / alpha, w[1] / alpha])
}
