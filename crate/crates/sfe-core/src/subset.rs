//! Bitmask subsets of a ground set {0, .., n-1} with n <= 64.

use crate::error::{Error, Result};
use crate::linalg::DenseVector;

pub const MAX_GROUND_SET: usize = 64;

/// A subset of the ground set {0, .., n-1}, stored as the low n bits of a word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset {
    bits: u64,
    n: u8,
}

impl std::fmt::Debug for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (pos, i) in self.iter().enumerate() {
            if pos > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}/{}", self.n)
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_GROUND_SET {
        return Err(Error::GroundSetTooLarge {
            n,
            max: MAX_GROUND_SET,
        });
    }
    Ok(())
}

fn low_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        check_n(n).expect("ground set too large");
        Subset { bits: 0, n: n as u8 }
    }

    pub fn full(n: usize) -> Self {
        check_n(n).expect("ground set too large");
        Subset {
            bits: low_mask(n),
            n: n as u8,
        }
    }

    pub fn singleton(i: usize, n: usize) -> Self {
        assert!(i < n, "element {i} outside ground set of size {n}");
        check_n(n).expect("ground set too large");
        Subset {
            bits: 1u64 << i,
            n: n as u8,
        }
    }

    pub fn try_from_bits(bits: u64, n: usize) -> Result<Self> {
        check_n(n)?;
        if bits & !low_mask(n) != 0 {
            return Err(Error::BitsOutOfRange { bits, n });
        }
        Ok(Subset { bits, n: n as u8 })
    }

    /// Panics if bits lie above the ground set; prefer `try_from_bits` for
    /// untrusted input.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self::try_from_bits(bits, n).expect("bits outside ground set")
    }

    pub fn from_indices(indices: &[usize], n: usize) -> Self {
        let mut bits = 0u64;
        for &i in indices {
            assert!(i < n, "element {i} outside ground set of size {n}");
            bits |= 1u64 << i;
        }
        check_n(n).expect("ground set too large");
        Subset { bits, n: n as u8 }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn cardinality(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n() && (self.bits >> i) & 1 == 1
    }

    pub fn with(&self, i: usize) -> Subset {
        assert!(i < self.n());
        Subset {
            bits: self.bits | (1 << i),
            n: self.n,
        }
    }

    pub fn without(&self, i: usize) -> Subset {
        assert!(i < self.n());
        Subset {
            bits: self.bits & !(1 << i),
            n: self.n,
        }
    }

    /// Bitwise intersection; errors when the two ground sets differ.
    pub fn intersect(&self, other: &Subset) -> Result<Subset> {
        if self.n != other.n {
            return Err(Error::GroundSetMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok(Subset {
            bits: self.bits & other.bits,
            n: self.n,
        })
    }

    pub fn union(&self, other: &Subset) -> Result<Subset> {
        if self.n != other.n {
            return Err(Error::GroundSetMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok(Subset {
            bits: self.bits | other.bits,
            n: self.n,
        })
    }

    /// 0/1 indicator vector of length n.
    pub fn indicator(&self) -> DenseVector {
        let mut v = vec![0.0; self.n()];
        for i in self.iter() {
            v[i] = 1.0;
        }
        DenseVector::new(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let bits = self.bits;
        (0..self.n()).filter(move |i| (bits >> i) & 1 == 1)
    }

    /// All 2^n subsets of a ground set, ascending by bitmask.
    pub fn enumerate_all(n: usize) -> impl Iterator<Item = Subset> {
        assert!(n <= 30, "refusing to enumerate 2^{n} subsets");
        (0u64..(1u64 << n)).map(move |bits| Subset {
            bits,
            n: n as u8,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_matches_membership() {
        let s = Subset::from_indices(&[0, 2], 3);
        assert_eq!(s.indicator().as_slice(), &[1.0, 0.0, 1.0]);
        let e = Subset::empty(4);
        assert_eq!(e.indicator().as_slice(), &[0.0; 4]);
        let f = Subset::full(2);
        assert_eq!(f.indicator().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn intersect_basic_identities() {
        let a = Subset::from_indices(&[0, 1], 3);
        let b = Subset::from_indices(&[1, 2], 3);
        assert_eq!(a.intersect(&b).unwrap(), Subset::from_indices(&[1], 3));
        assert_eq!(a.intersect(&a).unwrap(), a);
        assert_eq!(
            a.intersect(&Subset::empty(3)).unwrap(),
            Subset::empty(3)
        );
    }

    #[test]
    fn intersect_rejects_mismatched_ground_sets() {
        let a = Subset::empty(3);
        let b = Subset::empty(4);
        assert!(matches!(
            a.intersect(&b),
            Err(Error::GroundSetMismatch { .. })
        ));
    }

    #[test]
    fn bits_above_ground_set_rejected() {
        assert!(Subset::try_from_bits(0b100, 2).is_err());
        assert!(Subset::try_from_bits(0b11, 2).is_ok());
    }

    #[test]
    fn cardinality_of_intersection_via_bits_exhaustive() {
        // |S ∩ T| computed through the bit identity agrees with the
        // definition for every pair on a small ground set.
        let n = 6;
        for s in Subset::enumerate_all(n) {
            for t in Subset::enumerate_all(n) {
                let both = s.intersect(&t).unwrap();
                let count = (0..n)
                    .filter(|&i| s.contains(i) && t.contains(i))
                    .count();
                assert_eq!(both.cardinality(), count);
            }
        }
    }
}
