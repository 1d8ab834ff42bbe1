use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Largest domain size for which the doubly exponential exponents are
/// materialised.
pub const MAX_BOUND_SIZE: usize = 12;

/// Upper bound on the minimal absorption-term arity and the two known lower
/// bounds, for relations of arity at most `theta` on `size` elements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub theta: usize,
    pub size: usize,
    /// `(2θ - 2)^(3^size) / 2 + 1`.
    pub kappa: BigUint,
    /// `(θ - 1)^(2^(size - 2))`, defined for `θ >= 3` and `size >= 3`.
    pub lower_theta_ge3: Option<BigUint>,
    /// `2^(2^(size - 3))`, defined for `θ = 2` and `size >= 4`.
    pub lower_theta2: Option<BigUint>,
}

impl BoundReport {
    pub fn to_json_value(&self) -> Value {
        json!({
            "theta": self.theta,
            "size": self.size,
            "kappa": self.kappa.to_string(),
            "lower_theta_ge3": self.lower_theta_ge3.as_ref().map(|v| v.to_string()),
            "lower_theta2": self.lower_theta2.as_ref().map(|v| v.to_string()),
        })
    }
}

fn pow(base: usize, exp: u32) -> BigUint {
    BigUint::from(base).pow(exp)
}

fn pow_big(base: usize, exp: &BigUint) -> Result<BigUint> {
    let exp = u32::try_from(exp)
        .map_err(|_| Error::cap("bound exponent", exp.to_string(), u32::MAX as usize))?;
    Ok(pow(base, exp))
}

pub fn bounds(theta: usize, size: usize) -> Result<BoundReport> {
    if theta < 2 {
        return Err(Error::invalid("theta must be at least 2"));
    }
    if size == 0 {
        return Err(Error::invalid("size must be at least 1"));
    }
    if size > MAX_BOUND_SIZE {
        return Err(Error::cap("bound domain size", size.to_string(), MAX_BOUND_SIZE));
    }
    let exponent = pow(3, size as u32);
    let kappa = pow_big(2 * theta - 2, &exponent)? / 2u32 + 1u32;
    let lower_theta_ge3 = if theta >= 3 && size >= 3 {
        Some(pow_big(theta - 1, &pow(2, (size - 2) as u32))?)
    } else {
        None
    };
    let lower_theta2 = if theta == 2 && size >= 4 {
        Some(pow_big(2, &pow(2, (size - 3) as u32))?)
    } else {
        None
    };
    Ok(BoundReport {
        theta,
        size,
        kappa,
        lower_theta_ge3,
        lower_theta2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(bounds(2, 1).unwrap().kappa, BigUint::from(5u32));
        assert_eq!(bounds(2, 2).unwrap().kappa, BigUint::from(257u32));
        assert_eq!(bounds(3, 1).unwrap().kappa, BigUint::from(33u32));
        assert_eq!(bounds(3, 2).unwrap().kappa, BigUint::from(131_073u32));
        assert_eq!(bounds(3, 3).unwrap().lower_theta_ge3, Some(BigUint::from(4u32)));
        assert_eq!(bounds(2, 4).unwrap().lower_theta2, Some(BigUint::from(4u32)));
        assert_eq!(bounds(2, 3).unwrap().lower_theta2, None);
        assert_eq!(bounds(2, 3).unwrap().lower_theta_ge3, None);
        // (2)^27 / 2 + 1
        assert_eq!(bounds(2, 3).unwrap().kappa, BigUint::from(67_108_865u64));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(bounds(1, 2).is_err());
        assert!(bounds(2, 0).is_err());
        assert!(bounds(2, 1000).unwrap_err().is_resource());
    }
}
