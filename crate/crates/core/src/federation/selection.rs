//! Loss-matching admission of non-priority clients.
//!
//! After a broadcast of `w` and the global loss `F(w)`, a non-priority client
//! opts in when the model serves it at least as well as the priority
//! population up to `ε`: `F_k(w) ≤ F(w) + ε`. The server then keeps only the
//! updates whose loss is within `ε` on both sides: `|F(w) − F_k(w)| < ε`.

/// Server-side condition. Strict, so `ε = 0` admits nobody.
pub fn include_nonpriority(global_loss: f64, client_loss: f64, epsilon: f64) -> bool {
    (global_loss - client_loss).abs() < epsilon
}

/// Client-side condition. Non-strict.
pub fn client_opt_in(global_loss: f64, client_loss: f64, epsilon: f64) -> bool {
    client_loss <= global_loss + epsilon
}

/// Decision for one non-priority client in one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Admission {
    pub opted_in: bool,
    pub included: bool,
}

/// Both halves of the protocol at the broadcast model.
pub fn admit(global_loss: f64, client_loss: f64, epsilon: f64) -> Admission {
    let opted_in = client_opt_in(global_loss, client_loss, epsilon);
    Admission {
        opted_in,
        included: opted_in && include_nonpriority(global_loss, client_loss, epsilon),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn server_band_is_strict() {
        assert!(include_nonpriority(1.0, 1.1, 0.2));
        // 1.2 − 1.0 rounds below 0.2 in binary, so the boundary uses dyadic values
        assert!(!include_nonpriority(1.0, 1.25, 0.25));
        assert!(!include_nonpriority(1.0, 0.75, 0.25));
        assert!(!include_nonpriority(1.0, 1.0 + 1e-12, 0.0));
        assert!(!include_nonpriority(1.0, 1.0, 0.0));
    }

    #[test]
    fn client_gate_is_one_sided() {
        assert!(client_opt_in(1.0, 0.1, 0.2));
        assert!(!include_nonpriority(1.0, 0.1, 0.2));
        assert!(client_opt_in(1.0, 1.25, 0.25));
        assert!(client_opt_in(1.0, 1.0 + 0.2, 0.2));
        assert!(!client_opt_in(1.0, 1.3, 0.2));
    }

    #[test]
    fn admission_requires_opt_in() {
        assert_eq!(admit(1.0, 1.1, 0.2), Admission { opted_in: true, included: true });
        assert_eq!(admit(1.0, 0.5, 0.2), Admission { opted_in: true, included: false });
        assert_eq!(admit(1.0, 1.5, 0.2), Admission { opted_in: false, included: false });
    }
}
