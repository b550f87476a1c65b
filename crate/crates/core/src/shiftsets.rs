//! Shift-parameter sets and the swap algebra on them.
//!
//! A [`ShiftSet`] is an ordered list of complex shifts tagged with the role it
//! plays in a ratio of zeta products: `A`/`B` shift numerator factors, `C`/`D`
//! shift denominator factors. Swaps replace selected numerator shifts on one
//! side with negated shifts taken from the other side.

use std::fmt;
use std::ops::Deref;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the real part of every shift, and the strip for `C`/`D`.
pub const STRIP_BOUND: f64 = 0.25;

/// Offset scale used by [`ShiftSet::perturb_duplicates`].
pub const DEFAULT_PERTURBATION: f64 = 1e-6;

/// A single complex shift parameter. Serialized as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Shift(pub Complex64);

impl Shift {
    pub fn new(re: f64, im: f64) -> Self {
        Shift(Complex64::new(re, im))
    }

    pub fn real(re: f64) -> Self {
        Shift(Complex64::new(re, 0.0))
    }

    #[inline]
    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl From<[f64; 2]> for Shift {
    fn from(v: [f64; 2]) -> Self {
        Shift::new(v[0], v[1])
    }
}

impl From<Shift> for [f64; 2] {
    fn from(s: Shift) -> Self {
        [s.0.re, s.0.im]
    }
}

impl From<Complex64> for Shift {
    fn from(z: Complex64) -> Self {
        Shift(z)
    }
}

impl std::ops::Neg for Shift {
    type Output = Shift;
    fn neg(self) -> Shift {
        Shift(-self.0)
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    A,
    B,
    C,
    D,
}

impl Role {
    /// Numerator roles (`A`, `B`) only bound the real part from above.
    pub fn is_numerator(self) -> bool {
        matches!(self, Role::A | Role::B)
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::A => "A",
            Role::B => "B",
            Role::C => "C",
            Role::D => "D",
        };
        f.write_str(s)
    }
}

/// A constraint that a shift set fails.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    /// `Re` is at or above [`STRIP_BOUND`].
    RealPartTooLarge { index: usize, shift: Shift },
    /// Denominator shift with `Re <= 0`.
    RealPartNotPositive { index: usize, shift: Shift },
    /// Two elements coincide.
    Repeated { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RealPartTooLarge { index, shift } => {
                write!(f, "element {index} ({shift}) has real part >= 1/4")
            }
            Violation::RealPartNotPositive { index, shift } => write!(
                f,
                "element {index} ({shift}) of a denominator set must have positive real part"
            ),
            Violation::Repeated { first, second } => {
                write!(f, "elements {first} and {second} coincide")
            }
        }
    }
}

/// Ordered list of shifts with a role tag. Equality is structural.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSet {
    role: Role,
    elements: Vec<Shift>,
}

impl Deref for ShiftSet {
    type Target = [Shift];
    fn deref(&self) -> &[Shift] {
        &self.elements
    }
}

impl ShiftSet {
    pub fn new(role: Role, elements: Vec<Shift>) -> Self {
        ShiftSet { role, elements }
    }

    pub fn empty(role: Role) -> Self {
        ShiftSet::new(role, Vec::new())
    }

    /// Convenience constructor from real shifts.
    pub fn from_reals(role: Role, values: &[f64]) -> Self {
        ShiftSet::new(role, values.iter().map(|&x| Shift::real(x)).collect())
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn elements(&self) -> &[Shift] {
        &self.elements
    }

    pub fn values(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.elements.iter().map(|s| s.0)
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    /// Reports every violated constraint; an empty list means the set is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (index, &shift) in self.elements.iter().enumerate() {
            if shift.0.re >= STRIP_BOUND {
                out.push(Violation::RealPartTooLarge { index, shift });
            }
            if !self.role.is_numerator() && shift.0.re <= 0.0 {
                out.push(Violation::RealPartNotPositive { index, shift });
            }
        }
        out.extend(self.repeated_pairs());
        out
    }

    fn repeated_pairs(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for i in 0..self.elements.len() {
            for j in i + 1..self.elements.len() {
                if self.elements[i] == self.elements[j] {
                    out.push(Violation::Repeated { first: i, second: j });
                }
            }
        }
        out
    }

    pub fn has_duplicates(&self) -> bool {
        !self.repeated_pairs().is_empty()
    }

    pub fn negate(&self) -> ShiftSet {
        ShiftSet::new(self.role, self.elements.iter().map(|&s| -s).collect())
    }

    pub fn translate(&self, offset: Complex64) -> ShiftSet {
        ShiftSet::new(
            self.role,
            self.elements.iter().map(|s| Shift(s.0 + offset)).collect(),
        )
    }

    /// Removes the element at `index`.
    pub fn without(&self, index: usize) -> ShiftSet {
        let mut elements = self.elements.clone();
        elements.remove(index);
        ShiftSet::new(self.role, elements)
    }

    /// Appends `shift`.
    pub fn with(&self, shift: Shift) -> ShiftSet {
        let mut elements = self.elements.clone();
        elements.push(shift);
        ShiftSet::new(self.role, elements)
    }

    pub fn position(&self, shift: Shift) -> Option<usize> {
        self.elements.iter().position(|&s| s == shift)
    }

    /// Separates coincident elements: the k-th repeat of a value is moved by
    /// `k * magnitude`. Distinct sets are returned unchanged.
    pub fn perturb_duplicates(&self, magnitude: f64) -> ShiftSet {
        let mut out: Vec<Shift> = Vec::with_capacity(self.elements.len());
        for &s in &self.elements {
            let mut k = 0usize;
            let mut candidate = s;
            while out.contains(&candidate) {
                k += 1;
                candidate = Shift(s.0 + Complex64::new(k as f64 * magnitude, 0.0));
            }
            out.push(candidate);
        }
        ShiftSet::new(self.role, out)
    }

    /// Equality ignoring order.
    pub fn same_multiset(&self, other: &ShiftSet) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        self.elements.iter().all(|s| {
            match (0..other.len()).find(|&j| !used[j] && other.elements[j] == *s) {
                Some(j) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }
}

impl Serialize for ShiftSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.elements.serialize(serializer)
    }
}

/// Index selection `U ⊆ A`, `V ⊆ B` with `|U| = |V|`, stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SwapSelection {
    u: Vec<usize>,
    v: Vec<usize>,
}

impl SwapSelection {
    pub fn empty() -> Self {
        SwapSelection { u: Vec::new(), v: Vec::new() }
    }

    /// Builds a selection from indices into `A` and `B`.
    pub fn new(mut u: Vec<usize>, mut v: Vec<usize>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::InvalidSwap(format!(
                "|U| = {} differs from |V| = {}",
                u.len(),
                v.len()
            )));
        }
        u.sort_unstable();
        v.sort_unstable();
        if u.windows(2).any(|w| w[0] == w[1]) || v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSwap("repeated index in U or V".into()));
        }
        Ok(SwapSelection { u, v })
    }

    /// Builds a selection by locating the given shift values in `a` and `b`.
    pub fn from_values(a: &ShiftSet, b: &ShiftSet, u: &[Shift], v: &[Shift]) -> Result<Self> {
        let locate = |set: &ShiftSet, vals: &[Shift], name: &str| -> Result<Vec<usize>> {
            vals.iter()
                .map(|&x| {
                    set.position(x).ok_or_else(|| {
                        Error::InvalidSwap(format!("{x} is not an element of {name}"))
                    })
                })
                .collect()
        };
        SwapSelection::new(locate(a, u, "A")?, locate(b, v, "B")?)
    }

    pub fn u(&self) -> &[usize] {
        &self.u
    }

    pub fn v(&self) -> &[usize] {
        &self.v
    }

    pub fn size(&self) -> usize {
        self.u.len()
    }

    pub fn check(&self, a: &ShiftSet, b: &ShiftSet) -> Result<()> {
        if let Some(&i) = self.u.iter().find(|&&i| i >= a.len()) {
            return Err(Error::InvalidSwap(format!("U index {i} outside A (|A| = {})", a.len())));
        }
        if let Some(&j) = self.v.iter().find(|&&j| j >= b.len()) {
            return Err(Error::InvalidSwap(format!("V index {j} outside B (|B| = {})", b.len())));
        }
        Ok(())
    }

    /// Sum of the selected shifts of `A` and `B`, the exponent of `t/2π` in a swap term.
    pub fn shift_sum(&self, a: &ShiftSet, b: &ShiftSet) -> Complex64 {
        self.u.iter().map(|&i| a[i].0).sum::<Complex64>() + self.v.iter().map(|&j| b[j].0).sum::<Complex64>()
    }

    pub fn label(&self, a: &ShiftSet, b: &ShiftSet) -> String {
        if self.u.is_empty() {
            return "diagonal".to_string();
        }
        let fmt_list = |set: &ShiftSet, idx: &[usize]| {
            idx.iter()
                .map(|&i| format_complex(set[i].0))
                .collect::<Vec<_>>()
                .join(";")
        };
        format!("swap U={{{}}} V={{{}}}", fmt_list(a, &self.u), fmt_list(b, &self.v))
    }
}

fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

/// Returns `(A - U + V⁻, B - V + U⁻)`. The k-th selected element of `A` is
/// replaced in place by the negated k-th selected element of `B`, and vice versa.
pub fn swap(a: &ShiftSet, b: &ShiftSet, sel: &SwapSelection) -> Result<(ShiftSet, ShiftSet)> {
    sel.check(a, b)?;
    let mut new_a = a.elements.clone();
    let mut new_b = b.elements.clone();
    for (&i, &j) in sel.u.iter().zip(&sel.v) {
        new_a[i] = -b[j];
        new_b[j] = -a[i];
    }
    Ok((ShiftSet::new(a.role, new_a), ShiftSet::new(b.role, new_b)))
}

/// All selections with `|U| = |V| <= max_size`, the empty one first, ordered
/// by size and then lexicographically by indices.
pub fn enumerate_swaps(a: &ShiftSet, b: &ShiftSet, max_size: usize) -> Vec<SwapSelection> {
    let top = max_size.min(a.len()).min(b.len());
    let mut out = Vec::new();
    for k in 0..=top {
        let us = combinations(a.len(), k);
        let vs = combinations(b.len(), k);
        for u in &us {
            for v in &vs {
                out.push(SwapSelection { u: u.clone(), v: v.clone() });
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}
