//! Numeric iterated Lie brackets and the controllability certificates built on them.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{equilibrium_conditioning, vector_field, vector_fields, DynamicsError};
use crate::linalg::{norm2, norm_inf};
use crate::model::SwimmerParams;

/// Iterated bracket expression over field indices `0, 1, 2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BracketWord {
    Leaf(u8),
    Node(Box<BracketWord>, Box<BracketWord>),
}

impl BracketWord {
    pub fn leaf(index: u8) -> Self {
        assert!(index < 3, "field index must be 0, 1 or 2");
        BracketWord::Leaf(index)
    }

    pub fn bracket(a: BracketWord, b: BracketWord) -> Self {
        BracketWord::Node(Box::new(a), Box::new(b))
    }

    /// Number of leaves.
    pub fn len(&self) -> usize {
        match self {
            BracketWord::Leaf(_) => 1,
            BracketWord::Node(a, b) => a.len() + b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of bracket operations (`len - 1`).
    pub fn order(&self) -> usize {
        self.len() - 1
    }

    /// Nesting height of the tree (a leaf has height 0).
    pub fn height(&self) -> usize {
        match self {
            BracketWord::Leaf(_) => 0,
            BracketWord::Node(a, b) => 1 + a.height().max(b.height()),
        }
    }

    pub fn count(&self, index: u8) -> usize {
        match self {
            BracketWord::Leaf(i) => usize::from(*i == index),
            BracketWord::Node(a, b) => a.count(index) + b.count(index),
        }
    }

    /// All words with `1..=max_len` leaves, shortest first.
    pub fn enumerate(max_len: usize) -> Vec<BracketWord> {
        let mut by_len: Vec<Vec<BracketWord>> = vec![Vec::new()];
        for len in 1..=max_len {
            let mut words = Vec::new();
            if len == 1 {
                words.extend((0..3).map(BracketWord::Leaf));
            } else {
                for left in 1..len {
                    for a in &by_len[left] {
                        for b in &by_len[len - left] {
                            words.push(BracketWord::bracket(a.clone(), b.clone()));
                        }
                    }
                }
            }
            by_len.push(words);
        }
        by_len.into_iter().flatten().collect()
    }
}

impl fmt::Display for BracketWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketWord::Leaf(i) => write!(f, "{i}"),
            BracketWord::Node(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bracket word at byte {position}: {message}")]
pub struct ParseWordError {
    pub position: usize,
    pub message: &'static str,
}

impl FromStr for BracketWord {
    type Err = ParseWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes: Vec<(usize, u8)> = s
            .bytes()
            .enumerate()
            .filter(|(_, b)| !b.is_ascii_whitespace())
            .collect();
        let mut pos = 0;
        let word = parse_word(&bytes, &mut pos)?;
        if pos != bytes.len() {
            return Err(ParseWordError {
                position: bytes[pos].0,
                message: "trailing input",
            });
        }
        Ok(word)
    }
}

fn parse_word(bytes: &[(usize, u8)], pos: &mut usize) -> Result<BracketWord, ParseWordError> {
    let err = |pos: usize, message| ParseWordError {
        position: bytes.get(pos).map_or(usize::MAX, |b| b.0),
        message,
    };
    let expect = |pos: &mut usize, want: u8, message| {
        if bytes.get(*pos).map(|b| b.1) == Some(want) {
            *pos += 1;
            Ok(())
        } else {
            Err(err(*pos, message))
        }
    };
    match bytes.get(*pos).map(|b| b.1) {
        Some(d @ b'0'..=b'2') => {
            *pos += 1;
            Ok(BracketWord::Leaf(d - b'0'))
        }
        Some(b'[') => {
            *pos += 1;
            let a = parse_word(bytes, pos)?;
            expect(pos, b',', "expected ','")?;
            let b = parse_word(bytes, pos)?;
            expect(pos, b']', "expected ']'")?;
            Ok(BracketWord::bracket(a, b))
        }
        Some(_) => Err(err(*pos, "expected field index 0-2 or '['")),
        None => Err(err(*pos, "unexpected end of input")),
    }
}

impl Serialize for BracketWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BracketWord {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BracketError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("finite-difference step collapsed along a direction of size {direction_norm}")]
    StepCollapse { direction_norm: f64 },
    #[error("{0}")]
    Precondition(&'static str),
}

/// Central-difference settings for the directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DifferentiationScheme {
    /// Largest per-coordinate displacement at the outermost bracket.
    pub base_step: f64,
    /// Number of step halvings combined by Richardson extrapolation.
    pub levels: usize,
    /// Step multiplier applied per nesting level.
    pub depth_factor: f64,
}

impl Default for DifferentiationScheme {
    fn default() -> Self {
        Self {
            base_step: 1e-3,
            levels: 3,
            depth_factor: 3.0,
        }
    }
}

/// Three vector fields on a common state space.
pub trait FieldFamily: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, index: u8, p: &[f64]) -> Result<Vec<f64>, BracketError>;
}

/// The swimmer's drift and control fields.
#[derive(Debug, Clone, Copy)]
pub struct SwimmerFields<'a> {
    pub params: &'a SwimmerParams<f64>,
}

impl FieldFamily for SwimmerFields<'_> {
    fn dim(&self) -> usize {
        self.params.state_dim()
    }

    fn eval(&self, index: u8, p: &[f64]) -> Result<Vec<f64>, BracketError> {
        Ok(vector_field(self.params, p, index as usize)?)
    }
}

/// Fields given by a closure `(index, point) -> value`.
pub struct FnFields<F> {
    pub dim: usize,
    pub f: F,
}

impl<F> FieldFamily for FnFields<F>
where
    F: Fn(u8, &[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, index: u8, p: &[f64]) -> Result<Vec<f64>, BracketError> {
        Ok((self.f)(index, p))
    }
}

/// Evaluates `word` at `point`; a node `[g, h]` is `(g·∇)h − (h·∇)g`.
pub fn evaluate_bracket<F: FieldFamily + ?Sized>(
    word: &BracketWord,
    fields: &F,
    point: &[f64],
    scheme: &DifferentiationScheme,
) -> Result<Vec<f64>, BracketError> {
    if !(scheme.base_step > 0.0) || scheme.levels == 0 {
        return Err(BracketError::Precondition("scheme needs a positive step and at least one level"));
    }
    eval_at_depth(word, fields, point, scheme, 0)
}

fn eval_at_depth<F: FieldFamily + ?Sized>(
    word: &BracketWord,
    fields: &F,
    p: &[f64],
    scheme: &DifferentiationScheme,
    depth: i32,
) -> Result<Vec<f64>, BracketError> {
    match word {
        BracketWord::Leaf(i) => fields.eval(*i, p),
        BracketWord::Node(g, h) => {
            let vg = eval_at_depth(g, fields, p, scheme, depth + 1)?;
            let vh = eval_at_depth(h, fields, p, scheme, depth + 1)?;
            let step = scheme.base_step * scheme.depth_factor.powi(depth);
            let dh = directional(h, fields, p, &vg, step, scheme, depth + 1)?;
            let dg = directional(g, fields, p, &vh, step, scheme, depth + 1)?;
            Ok(dh.iter().zip(&dg).map(|(a, b)| a - b).collect())
        }
    }
}

/// Richardson-extrapolated central difference of `word` along `v` at `p`.
fn directional<F: FieldFamily + ?Sized>(
    word: &BracketWord,
    fields: &F,
    p: &[f64],
    v: &[f64],
    step: f64,
    scheme: &DifferentiationScheme,
    depth: i32,
) -> Result<Vec<f64>, BracketError> {
    let scale = norm_inf(v);
    if scale == 0.0 {
        return Ok(vec![0.0; p.len()]);
    }
    let t0 = step / scale;
    if !t0.is_finite() || t0 == 0.0 {
        return Err(BracketError::StepCollapse { direction_norm: scale });
    }
    // `table[j]` is the j-times extrapolated estimate for the latest step.
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(scheme.levels);
    for k in 0..scheme.levels {
        let t = t0 / f64::powi(2.0, k as i32);
        let plus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a + t * b).collect();
        let minus: Vec<f64> = p.iter().zip(v).map(|(a, b)| a - t * b).collect();
        if plus == minus {
            return Err(BracketError::StepCollapse { direction_norm: scale });
        }
        let fp = eval_at_depth(word, fields, &plus, scheme, depth)?;
        let fm = eval_at_depth(word, fields, &minus, scheme, depth)?;
        let mut current: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * t)).collect();
        let mut columns = Vec::with_capacity(k + 1);
        columns.push(current.clone());
        for (j, prev) in table.iter().enumerate() {
            let w = 4f64.powi(j as i32 + 1);
            current = current.iter().zip(prev).map(|(a, b)| a + (a - b) / (w - 1.0)).collect();
            columns.push(current.clone());
        }
        table = columns;
    }
    Ok(table.pop().unwrap())
}

fn origin(params: &SwimmerParams<f64>) -> Vec<f64> {
    vec![0.0; params.state_dim()]
}

fn require_two_links(params: &SwimmerParams<f64>) -> Result<(), BracketError> {
    if params.n_links == 2 {
        Ok(())
    } else {
        Err(BracketError::Precondition("this certificate is stated for N = 2"))
    }
}

/// Tolerance for a bracket with the given number of bracket operations.
pub fn order_tolerance(order: usize) -> f64 {
    match order {
        0..=2 => 1e-6,
        3 => 1e-4,
        _ => 1e-3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionChecks {
    pub f0_norm: f64,
    pub f1_norm: f64,
    pub f2_norm: f64,
    pub f2_first_abs: f64,
    /// Gradient of the first component of F0 at the origin.
    pub grad_f0_first: Vec<f64>,
    pub grad_f1_first: Vec<f64>,
    pub gradient_tolerance: f64,
    pub fields_vanish: bool,
    pub gradients_aligned: bool,
    pub control_first_vanishes: bool,
}

impl AssumptionChecks {
    pub fn all_pass(&self) -> bool {
        self.fields_vanish && self.gradients_aligned && self.control_first_vanishes
    }
}

/// Jacobian column `∂F/∂p_j` at `p` by Richardson central differences.
fn jacobian_column<F: FieldFamily + ?Sized>(
    fields: &F,
    index: u8,
    p: &[f64],
    j: usize,
    scheme: &DifferentiationScheme,
) -> Result<Vec<f64>, BracketError> {
    let mut e = vec![0.0; p.len()];
    e[j] = 1.0;
    directional(&BracketWord::Leaf(index), fields, p, &e, scheme.base_step, scheme, 1)
}

/// Field values and first-component gradients at the origin.
pub fn verify_assumptions(
    params: &SwimmerParams<f64>,
    scheme: &DifferentiationScheme,
) -> Result<AssumptionChecks, BracketError> {
    let p = origin(params);
    let f = vector_fields(params, &p)?;
    let fields = SwimmerFields { params };
    let n = p.len();
    let mut grads = [vec![0.0; n], vec![0.0; n]];
    let mut jac_scale: f64 = 0.0;
    for (k, index) in [0u8, 1].into_iter().enumerate() {
        for j in 0..n {
            let col = jacobian_column(&fields, index, &p, j, scheme)?;
            jac_scale = jac_scale.max(norm_inf(&col));
            grads[k][j] = col[0];
        }
    }
    let f2_norm = norm2(&f.f2);
    let f0_norm = norm2(&f.f0);
    let f1_norm = norm2(&f.f1);
    let vanish_tol = 1e-10 * f2_norm.max(1.0);
    let gradient_tolerance = 1e-8 * jac_scale.max(1.0);
    let off_axis = grads
        .iter()
        .flat_map(|g| g[1..].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let [grad_f0_first, grad_f1_first] = grads;
    Ok(AssumptionChecks {
        f0_norm,
        f1_norm,
        f2_norm,
        f2_first_abs: f.f2[0].abs(),
        grad_f0_first,
        grad_f1_first,
        gradient_tolerance,
        fields_vanish: f0_norm < vanish_tol && f1_norm < vanish_tol && f2_norm > 0.0,
        gradients_aligned: off_axis <= gradient_tolerance,
        control_first_vanishes: f2_norm > 0.0 && f.f2[0].abs() <= 1e-9 * f2_norm,
    })
}

/// `[F2, [F0, F2]]` at the origin.
pub fn f202_at_origin(
    params: &SwimmerParams<f64>,
    scheme: &DifferentiationScheme,
) -> Result<Vec<f64>, BracketError> {
    require_two_links(params)?;
    let word: BracketWord = "[2,[0,2]]".parse().expect("valid word");
    evaluate_bracket(&word, &SwimmerFields { params }, &origin(params), scheme)
}

/// First component of `[F2, [F0, F2]]` at the origin.
pub fn alpha_numeric(params: &SwimmerParams<f64>, scheme: &DifferentiationScheme) -> Result<f64, BracketError> {
    Ok(f202_at_origin(params, scheme)?[0])
}

/// Closed-form coefficient of the third-order obstruction, as a rational function of the constants.
pub fn alpha_closed_form(params: &SwimmerParams<f64>) -> Result<f64, BracketError> {
    require_two_links(params)?;
    let SwimmerParams {
        head_radius: r,
        head_drag_par: kph,
        head_drag_perp: kth,
        link_drag_par: kp,
        link_drag_perp: kt,
        elastic: kel,
        magnetization: m,
        ..
    } = *params;
    let l = params.link_length();
    let numerator = 324.0
        * kel
        * m
        * m
        * (132.0 * kt.powi(3) * l.powi(4) - 4.0 * kp * kth * kth * r * r * (5.0 * l * l - 38.0 * l * r + 30.0 * r * r)
            + kt * kt * (-132.0 * kp * l.powi(4) + l * l * r * (105.0 * kth * l + 47.0 * kph * l - 252.0 * kth * r))
            + 2.0
                * kt
                * kth
                * r
                * (kph * l * (l - 25.0 * r) * r
                    + 2.0 * kp * l * l * (-38.0 * l + 63.0 * r)
                    + kth * r * (9.0 * l * l - 51.0 * l * r + 60.0 * r * r)));
    let w = resistance_block_factor(params);
    let denominator = kt * l.powi(3) * (2.0 * kp * l + kph * r) * w * w;
    if denominator == 0.0 {
        return Err(BracketError::Precondition("closed-form denominator vanishes"));
    }
    Ok(numerator / denominator)
}

/// `14 k⊥² l⁴ + 42 k⊥ʰ k_r r⁴ + k⊥ l r (12 k_r r² + k⊥ʰ (49 l² + 39 l r + 12 r²))`.
fn resistance_block_factor(params: &SwimmerParams<f64>) -> f64 {
    let l = params.link_length();
    let r = params.head_radius;
    let kt = params.link_drag_perp;
    let kth = params.head_drag_perp;
    let kr = params.head_drag_rot;
    14.0 * kt * kt * l.powi(4)
        + 42.0 * kth * kr * r.powi(4)
        + kt * l * r * (12.0 * kr * r * r + kth * (49.0 * l * l + 39.0 * l * r + 12.0 * r * r))
}

/// Constant term of the determinant expansion at the origin.
pub fn det_equilibrium_closed_form(params: &SwimmerParams<f64>) -> Result<f64, BracketError> {
    require_two_links(params)?;
    let l = params.link_length();
    let r = params.head_radius;
    let kt = params.link_drag_perp;
    let lead = kt * kt * l.powi(6) * (2.0 * params.link_drag_par * l + params.head_drag_perp * r);
    Ok(-lead * resistance_block_factor(params) / 216.0)
}

/// Solves the closed-form numerator for `k_par`, keeping every other constant.
///
/// Returns `None` when no positive solution exists.
pub fn closed_form_alpha_root_in_k_par(params: &SwimmerParams<f64>) -> Option<SwimmerParams<f64>> {
    let at = |kp: f64| {
        let p = SwimmerParams {
            link_drag_par: kp,
            elastic: 1.0,
            magnetization: 1.0,
            ..*params
        };
        let w = resistance_block_factor(&p);
        let l = p.link_length();
        alpha_closed_form(&p).ok().map(|a| a * p.link_drag_perp * l.powi(3) * (2.0 * kp * l + p.head_drag_par * p.head_radius) * w * w)
    };
    // The numerator is affine in k_par.
    let n0 = at(0.0)?;
    let n1 = at(1.0)?;
    let slope = n1 - n0;
    if slope == 0.0 {
        return None;
    }
    let root = -n0 / slope;
    (root > 0.0).then(|| SwimmerParams {
        link_drag_par: root,
        ..*params
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub word: BracketWord,
    pub f2_count: usize,
    pub order: usize,
    pub tolerance: f64,
    pub norm: f64,
    pub first_component: f64,
    /// `norm` for words without F2, `|first| / (1 + norm)` for words with one F2, 0 otherwise.
    pub residual: f64,
    pub asserted: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuite {
    pub max_len: usize,
    pub entries: Vec<LemmaEntry>,
    pub f212_norm: f64,
}

impl LemmaSuite {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Evaluates every word of length `≤ max_len` at the origin and classifies it by F2 count.
pub fn lemma_suite(
    params: &SwimmerParams<f64>,
    max_len: usize,
    scheme: &DifferentiationScheme,
) -> Result<LemmaSuite, BracketError> {
    if max_len > 4 {
        return Err(BracketError::Precondition("lemma suite supports words of length at most 4"));
    }
    let p = origin(params);
    let fields = SwimmerFields { params };
    let entries = BracketWord::enumerate(max_len)
        .into_par_iter()
        .map(|word| {
            let v = evaluate_bracket(&word, &fields, &p, scheme)?;
            let f2_count = word.count(2);
            let order = word.order();
            let tolerance = order_tolerance(order);
            let norm = norm2(&v);
            let first_component = v[0];
            let (residual, asserted) = match f2_count {
                0 => (norm, true),
                1 => (first_component.abs() / (1.0 + norm), true),
                _ => (0.0, false),
            };
            Ok(LemmaEntry {
                word,
                f2_count,
                order,
                tolerance,
                norm,
                first_component,
                residual,
                asserted,
                pass: !asserted || residual < tolerance,
            })
        })
        .collect::<Result<Vec<_>, BracketError>>()?;
    let f212 = evaluate_bracket(&"[2,[1,2]]".parse().unwrap(), &fields, &p, scheme)?;
    Ok(LemmaSuite {
        max_len,
        entries,
        f212_norm: norm2(&f212),
    })
}

/// The eight fifth-order brackets entering the quadratic map, evaluated at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FifthOrderBrackets {
    pub f02_002: Vec<f64>,
    pub f02_102: Vec<f64>,
    pub f12_012: Vec<f64>,
    pub f12_112: Vec<f64>,
    pub f12_002: Vec<f64>,
    pub f02_012: Vec<f64>,
    pub f12_102: Vec<f64>,
    pub f02_112: Vec<f64>,
}

/// `[[i, j], [k, [l, m]]]`.
fn pair_triple(i: u8, j: u8, k: u8, l: u8, m: u8) -> BracketWord {
    let lf = BracketWord::Leaf;
    BracketWord::bracket(
        BracketWord::bracket(lf(i), lf(j)),
        BracketWord::bracket(lf(k), BracketWord::bracket(lf(l), lf(m))),
    )
}

pub fn fifth_order_brackets(
    params: &SwimmerParams<f64>,
    scheme: &DifferentiationScheme,
) -> Result<FifthOrderBrackets, BracketError> {
    require_two_links(params)?;
    let p = origin(params);
    let fields = SwimmerFields { params };
    let words = [
        pair_triple(0, 2, 0, 0, 2),
        pair_triple(0, 2, 1, 0, 2),
        pair_triple(1, 2, 0, 1, 2),
        pair_triple(1, 2, 1, 1, 2),
        pair_triple(1, 2, 0, 0, 2),
        pair_triple(0, 2, 0, 1, 2),
        pair_triple(1, 2, 1, 0, 2),
        pair_triple(0, 2, 1, 1, 2),
    ];
    let mut v = words
        .par_iter()
        .map(|w| evaluate_bracket(w, &fields, &p, scheme))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    let mut next = || v.next().unwrap();
    Ok(FifthOrderBrackets {
        f02_002: next(),
        f02_102: next(),
        f12_012: next(),
        f12_112: next(),
        f12_002: next(),
        f02_012: next(),
        f12_102: next(),
        f02_112: next(),
    })
}

impl FifthOrderBrackets {
    /// The quadratic map in `(λ1, λ2)` for the equilibrium control `u1_eq`.
    pub fn combine(&self, u1_eq: f64, lambda1: f64, lambda2: f64) -> Vec<f64> {
        let n = self.f02_002.len();
        (0..n)
            .map(|i| {
                lambda1 * lambda1 * (self.f02_002[i] - u1_eq * self.f02_102[i])
                    + lambda2 * lambda2 * (self.f12_012[i] - u1_eq * self.f12_112[i])
                    - lambda1
                        * lambda2
                        * (self.f12_002[i] + self.f02_012[i] - u1_eq * (self.f12_102[i] + self.f02_112[i]))
            })
            .collect()
    }
}

pub fn d_map(
    params: &SwimmerParams<f64>,
    u1_eq: f64,
    lambda1: f64,
    lambda2: f64,
    scheme: &DifferentiationScheme,
) -> Result<Vec<f64>, BracketError> {
    Ok(fifth_order_brackets(params, scheme)?.combine(u1_eq, lambda1, lambda2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DMapEvaluation {
    pub u1_eq: f64,
    pub lambda: [f64; 2],
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetCrossCheck {
    pub closed_form: f64,
    pub assembled: f64,
    pub assembled_condition_number: f64,
    pub same_sign: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub params: SwimmerParams<f64>,
    pub scheme: DifferentiationScheme,
    pub assumptions: AssumptionChecks,
    pub alpha_numeric: f64,
    pub alpha_closed_form: f64,
    pub alpha_relative_gap: f64,
    pub f202_at_origin: Vec<f64>,
    pub f202_max_non_first: f64,
    pub f212_norm_at_origin: f64,
    pub gamma: f64,
    pub lemma_suite: LemmaSuite,
    pub d_map: Vec<DMapEvaluation>,
    pub det_cross_check: Option<DetCrossCheck>,
    pub checks: Vec<NamedCheck>,
}

impl CertificateReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs every certificate for a two-link swimmer and collects the verdicts.
pub fn certificate_report(
    params: &SwimmerParams<f64>,
    scheme: &DifferentiationScheme,
) -> Result<CertificateReport, BracketError> {
    require_two_links(params)?;
    let assumptions = verify_assumptions(params, scheme)?;
    let f202 = f202_at_origin(params, scheme)?;
    let alpha_numeric = f202[0];
    let alpha_cf = alpha_closed_form(params)?;
    let alpha_relative_gap = (alpha_numeric - alpha_cf).abs() / alpha_cf.abs();
    let f202_max_non_first = norm_inf(&f202[1..]);
    let lemma_suite = lemma_suite(params, 4, scheme)?;
    let f212_norm = lemma_suite.f212_norm;
    let fifth = fifth_order_brackets(params, scheme)?;
    let d_map = [(0.0, 1.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 1.0), (1.0, 1.0, -1.0)]
        .into_iter()
        .map(|(u1_eq, l1, l2)| DMapEvaluation {
            u1_eq,
            lambda: [l1, l2],
            value: fifth.combine(u1_eq, l1, l2),
        })
        .collect();
    let det_cross_check = match equilibrium_conditioning(params) {
        Ok((assembled, cond)) => {
            let closed_form = det_equilibrium_closed_form(params)?;
            Some(DetCrossCheck {
                closed_form,
                assembled,
                assembled_condition_number: cond,
                same_sign: closed_form.signum() == assembled.signum(),
            })
        }
        Err(_) => None,
    };

    let mut checks = Vec::new();
    let mut check = |name: &str, pass: bool, detail: String| {
        checks.push(NamedCheck {
            name: name.to_string(),
            pass,
            detail,
        })
    };
    check(
        "fields_vanish_at_origin",
        assumptions.fields_vanish,
        format!("|F0| = {:e}, |F1| = {:e}, |F2| = {:e}", assumptions.f0_norm, assumptions.f1_norm, assumptions.f2_norm),
    );
    check(
        "first_component_gradients_aligned",
        assumptions.gradients_aligned,
        format!("tolerance {:e}", assumptions.gradient_tolerance),
    );
    check(
        "control_field_first_component_vanishes",
        assumptions.control_first_vanishes,
        format!("|F2_1| = {:e}", assumptions.f2_first_abs),
    );
    check(
        "alpha_matches_closed_form",
        alpha_relative_gap < 1e-4,
        format!("numeric {alpha_numeric:e}, closed form {alpha_cf:e}, relative gap {alpha_relative_gap:e}"),
    );
    check(
        "f202_parallel_to_e1",
        f202_max_non_first < 1e-6 * alpha_numeric.abs(),
        format!("max non-first component {f202_max_non_first:e}"),
    );
    check(
        "f212_vanishes",
        f212_norm < 1e-6 * alpha_numeric.abs(),
        format!("|F212| = {f212_norm:e}"),
    );
    check(
        "lemma_suite",
        lemma_suite.all_pass(),
        format!("{} failing words", lemma_suite.failures().count()),
    );
    check(
        "obstruction_headline",
        alpha_numeric != 0.0
            && alpha_numeric.abs() > 1e3 * f212_norm
            && alpha_numeric.abs() > 1e6 * f202_max_non_first,
        format!("|alpha| = {:e}", alpha_numeric.abs()),
    );
    if let Some(det) = &det_cross_check {
        check(
            "determinant_sign",
            det.closed_form < 0.0,
            format!("closed form {:e}, assembled {:e}", det.closed_form, det.assembled),
        );
    }

    Ok(CertificateReport {
        params: *params,
        scheme: *scheme,
        assumptions,
        alpha_numeric,
        alpha_closed_form: alpha_cf,
        alpha_relative_gap,
        f202_at_origin: f202,
        f202_max_non_first,
        f212_norm_at_origin: f212_norm,
        gamma: fifth.f02_002[0],
        lemma_suite,
        d_map,
        det_cross_check,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_round_trip() {
        for s in ["0", "[2,[0,2]]", "[[0,2],[1,[1,2]]]"] {
            let w: BracketWord = s.parse().unwrap();
            assert_eq!(w.to_string(), s);
        }
        let w: BracketWord = " [ 2 , [0,2] ]".parse().unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.count(2), 2);
        assert!("[3,0]".parse::<BracketWord>().is_err());
        assert!("[0,1".parse::<BracketWord>().is_err());
        assert!("[0,1]]".parse::<BracketWord>().is_err());
    }

    #[test]
    fn enumeration_counts() {
        // Catalan(k-1)·3^k words of length k.
        assert_eq!(BracketWord::enumerate(1).len(), 3);
        assert_eq!(BracketWord::enumerate(2).len(), 3 + 9);
        assert_eq!(BracketWord::enumerate(4).len(), 3 + 9 + 54 + 405);
    }

    #[test]
    fn linear_fields_bracket() {
        let fields = FnFields {
            dim: 2,
            f: |i: u8, p: &[f64]| match i {
                0 => vec![p[1], 0.0],
                _ => vec![0.0, p[0]],
            },
        };
        let v = evaluate_bracket(&"[0,1]".parse().unwrap(), &fields, &[1.0, 2.0], &Default::default()).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-12 && (v[1] - 2.0).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn closed_form_scaling() {
        let p = SwimmerParams::<f64>::default();
        let a = alpha_closed_form(&p).unwrap();
        let a2 = alpha_closed_form(&SwimmerParams { magnetization: 2.0 * p.magnetization, ..p }).unwrap();
        assert!((a2 / a - 4.0).abs() < 1e-12);
        assert_eq!(alpha_closed_form(&SwimmerParams { elastic: 0.0, ..p }).unwrap(), 0.0);
        let root = closed_form_alpha_root_in_k_par(&p).unwrap();
        assert!(alpha_closed_form(&root).unwrap().abs() < 1e-9 * a.abs());
    }
}
