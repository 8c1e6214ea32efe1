//! Circuits: ordered op lists over numbered wires, and the simulator that runs them.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{argument, Result};
use crate::linalg::{Matrix2, C64};
use crate::oracle::{AccessMode, BlackBoxUnitary, QueryCounts};
use crate::register::Register;
use crate::sparse::SparseState;
use crate::state::{check_dense_size, Control, PureState, QubitLayout};
use crate::tolerance::ATOL;

#[derive(Debug, Clone)]
pub enum CircuitOp {
    /// A single-qubit unitary.
    Gate { matrix: Matrix2, target: usize, controls: Vec<Control> },
    /// Flips `target` iff every wire of `register` is 0.
    ZeroControl { register: Vec<usize>, target: usize, controls: Vec<Control> },
    /// The rotation with first column (alpha, beta) and second column
    /// (conj beta, -conj alpha), or its adjoint.
    Rotation { alpha: C64, beta: C64, adjoint: bool, target: usize, controls: Vec<Control> },
    /// One query to a black box. `register` lists its data wires then its
    /// internal ancillas.
    OracleCall { oracle: Arc<BlackBoxUnitary>, adjoint: bool, register: Vec<usize>, controls: Vec<Control> },
    /// Flips every target on the component along `preparer|0...0>`.
    ///
    /// Stands for `preparer^-1`, a zero control onto each target, then
    /// `preparer`; only the zero control carries `controls`. See
    /// [`Circuit::expand_macros`] for the literal gate list.
    StateControl { preparer: Arc<Circuit>, register: Vec<usize>, targets: Vec<usize>, controls: Vec<Control> },
}

impl CircuitOp {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Gate { .. } => "gate",
            Self::ZeroControl { .. } => "zero_control",
            Self::Rotation { .. } => "rotation",
            Self::OracleCall { .. } => "oracle_call",
            Self::StateControl { .. } => "state_control",
        }
    }

    pub fn controls(&self) -> &[Control] {
        match self {
            Self::Gate { controls, .. }
            | Self::ZeroControl { controls, .. }
            | Self::Rotation { controls, .. }
            | Self::OracleCall { controls, .. }
            | Self::StateControl { controls, .. } => controls,
        }
    }

    fn controls_mut(&mut self) -> &mut Vec<Control> {
        match self {
            Self::Gate { controls, .. }
            | Self::ZeroControl { controls, .. }
            | Self::Rotation { controls, .. }
            | Self::OracleCall { controls, .. }
            | Self::StateControl { controls, .. } => controls,
        }
    }

    /// Wires the op acts on, excluding controls.
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Self::Gate { target, .. } | Self::Rotation { target, .. } => vec![*target],
            Self::ZeroControl { register, target, .. } => register.iter().copied().chain([*target]).collect(),
            Self::OracleCall { register, .. } => register.clone(),
            Self::StateControl { register, targets, .. } => register.iter().chain(targets).copied().collect(),
        }
    }

    /// Access mode of an oracle call.
    pub fn access_mode(&self) -> Option<AccessMode> {
        match self {
            Self::OracleCall { adjoint, controls, .. } => Some(AccessMode::new(*adjoint, !controls.is_empty())),
            _ => None,
        }
    }

    pub fn inverse(&self) -> CircuitOp {
        let mut op = self.clone();
        match &mut op {
            Self::Gate { matrix, .. } => *matrix = matrix.adjoint(),
            Self::Rotation { adjoint, .. } | Self::OracleCall { adjoint, .. } => *adjoint = !*adjoint,
            Self::ZeroControl { .. } | Self::StateControl { .. } => {}
        }
        op
    }

    fn remapped(&self, map: &[usize], extra: &[Control]) -> CircuitOp {
        let m = |ws: &[usize]| ws.iter().map(|&w| map[w]).collect::<Vec<_>>();
        let mut op = match self {
            Self::Gate { matrix, target, controls } => Self::Gate { matrix: *matrix, target: map[*target], controls: controls.clone() },
            Self::ZeroControl { register, target, controls } => {
                Self::ZeroControl { register: m(register), target: map[*target], controls: controls.clone() }
            }
            Self::Rotation { alpha, beta, adjoint, target, controls } => {
                Self::Rotation { alpha: *alpha, beta: *beta, adjoint: *adjoint, target: map[*target], controls: controls.clone() }
            }
            Self::OracleCall { oracle, adjoint, register, controls } => {
                Self::OracleCall { oracle: oracle.clone(), adjoint: *adjoint, register: m(register), controls: controls.clone() }
            }
            Self::StateControl { preparer, register, targets, controls } => Self::StateControl {
                preparer: preparer.clone(),
                register: m(register),
                targets: m(targets),
                controls: controls.clone(),
            },
        };
        let controls = op.controls_mut();
        for c in controls.iter_mut() {
            c.wire = map[c.wire];
        }
        controls.extend_from_slice(extra);
        op
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    num_qubits: usize,
    layout: QubitLayout,
    ops: Vec<CircuitOp>,
}

impl Circuit {
    pub fn new(num_qubits: usize, layout: QubitLayout) -> Result<Self> {
        if num_qubits == 0 {
            return Err(argument!("a circuit needs at least one wire"));
        }
        layout.validate(num_qubits)?;
        Ok(Self { num_qubits, layout, ops: Vec::new() })
    }

    /// A preparer of width `width` that makes one apply query to `oracle`
    /// on its leading wires.
    pub fn from_oracle(oracle: &Arc<BlackBoxUnitary>, width: usize) -> Result<Self> {
        let wires = oracle.total_wires();
        if width < wires {
            return Err(argument!("oracle {} needs {wires} wires, preparer has {width}", oracle.label()));
        }
        let mut c = Self::new(width, QubitLayout::new(oracle.num_qubits(), width - oracle.num_qubits()))?;
        c.oracle(oracle, false, &(0..wires).collect::<Vec<_>>(), &[])?;
        Ok(c)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn layout(&self) -> &QubitLayout {
        &self.layout
    }

    pub fn ops(&self) -> &[CircuitOp] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: CircuitOp) -> Result<()> {
        self.validate(&op)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn gate(&mut self, matrix: Matrix2, target: usize, controls: &[Control]) -> Result<()> {
        self.push(CircuitOp::Gate { matrix, target, controls: controls.to_vec() })
    }

    pub fn zero_control(&mut self, register: &[usize], target: usize, controls: &[Control]) -> Result<()> {
        self.push(CircuitOp::ZeroControl { register: register.to_vec(), target, controls: controls.to_vec() })
    }

    pub fn rotation(&mut self, alpha: C64, beta: C64, target: usize, controls: &[Control]) -> Result<()> {
        self.push(CircuitOp::Rotation { alpha, beta, adjoint: false, target, controls: controls.to_vec() })
    }

    pub fn oracle(&mut self, oracle: &Arc<BlackBoxUnitary>, adjoint: bool, register: &[usize], controls: &[Control]) -> Result<()> {
        self.push(CircuitOp::OracleCall { oracle: oracle.clone(), adjoint, register: register.to_vec(), controls: controls.to_vec() })
    }

    /// Flips `targets` on the component along `preparer|0>`. An empty
    /// preparer is emitted as plain zero controls.
    pub fn state_control(&mut self, preparer: &Arc<Circuit>, register: &[usize], targets: &[usize], controls: &[Control]) -> Result<()> {
        if preparer.is_empty() {
            if register.len() != preparer.num_qubits() || targets.is_empty() {
                return Err(argument!("state control register/targets do not fit the preparer"));
            }
            for &t in targets {
                self.zero_control(register, t, controls)?;
            }
            return Ok(());
        }
        self.push(CircuitOp::StateControl {
            preparer: preparer.clone(),
            register: register.to_vec(),
            targets: targets.to_vec(),
            controls: controls.to_vec(),
        })
    }

    /// Appends `other` (or its inverse) with wire `i` of `other` placed on
    /// `map[i]` and `extra` controls added to every op.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize], adjoint: bool, extra: &[Control]) -> Result<()> {
        if map.len() != other.num_qubits {
            return Err(argument!("wire map has {} entries for a {}-wire circuit", map.len(), other.num_qubits));
        }
        let ops: Vec<&CircuitOp> = if adjoint { other.ops.iter().rev().collect() } else { other.ops.iter().collect() };
        for op in ops {
            let op = if adjoint { op.inverse() } else { op.clone() };
            self.push(op.remapped(map, extra))?;
        }
        Ok(())
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, layout: self.layout.clone(), ops: self.ops.iter().rev().map(CircuitOp::inverse).collect() }
    }

    /// The same circuit with `control` added to every op, on one extra
    /// highest wire.
    pub fn controlled(&self, value: bool) -> Result<Circuit> {
        let n = self.num_qubits;
        let layout = QubitLayout {
            main: self.layout.main.clone(),
            ancillas: self.layout.ancillas.clone(),
            controls: self.layout.controls.start..n + 1,
        };
        let mut out = Circuit::new(n + 1, layout)?;
        out.append_mapped(self, &(0..n).collect::<Vec<_>>(), false, &[Control { wire: n, value }])?;
        Ok(out)
    }

    /// Replaces every state control by its literal `preparer^-1`, zero
    /// controls, `preparer` sequence, recursively.
    pub fn expand_macros(&self) -> Result<Circuit> {
        let mut out = Circuit::new(self.num_qubits, self.layout.clone())?;
        for op in &self.ops {
            match op {
                CircuitOp::StateControl { preparer, register, targets, controls } => {
                    let p = preparer.expand_macros()?;
                    out.append_mapped(&p, register, true, &[])?;
                    for &t in targets {
                        out.zero_control(register, t, controls)?;
                    }
                    out.append_mapped(&p, register, false, &[])?;
                }
                other => out.push(other.clone())?,
            }
        }
        Ok(out)
    }

    /// Oracle invocations made by one execution, per oracle in order of
    /// first appearance.
    pub fn query_counts(&self) -> Vec<(Arc<BlackBoxUnitary>, QueryCounts)> {
        let mut out = Vec::new();
        self.accumulate(false, &mut out);
        out
    }

    pub fn queries_of(&self, oracle: &Arc<BlackBoxUnitary>) -> QueryCounts {
        self.query_counts()
            .into_iter()
            .find(|(o, _)| Arc::ptr_eq(o, oracle))
            .map(|(_, c)| c)
            .unwrap_or_default()
    }

    fn accumulate(&self, inverted: bool, out: &mut Vec<(Arc<BlackBoxUnitary>, QueryCounts)>) {
        for op in &self.ops {
            match op {
                CircuitOp::OracleCall { oracle, adjoint, controls, .. } => {
                    let mode = AccessMode::new(*adjoint ^ inverted, !controls.is_empty());
                    match out.iter_mut().find(|(o, _)| Arc::ptr_eq(o, oracle)) {
                        Some((_, c)) => c.add_mode(mode, 1),
                        None => {
                            let mut c = QueryCounts::default();
                            c.add_mode(mode, 1);
                            out.push((oracle.clone(), c));
                        }
                    }
                }
                CircuitOp::StateControl { preparer, .. } => {
                    preparer.accumulate(true, out);
                    preparer.accumulate(false, out);
                }
                _ => {}
            }
        }
    }

    /// Runs the circuit on a dense state of the same width.
    pub fn simulate(&self, input: &PureState) -> Result<PureState> {
        check_dense_size(self.num_qubits)?;
        let mut state = input.clone();
        Simulator::new().run(self, &mut state)?;
        Ok(state)
    }

    pub fn simulate_sparse(&self, mut input: SparseState) -> Result<SparseState> {
        Simulator::new().run(self, &mut input)?;
        Ok(input)
    }

    /// [`Circuit::simulate_sparse`] with amplitudes at or below `threshold`
    /// dropped after each operation; also returns the discarded-norm bound.
    pub fn simulate_truncated(&self, mut input: SparseState, threshold: f64) -> Result<(SparseState, f64)> {
        let mut sim = Simulator::with_truncation(threshold);
        sim.run(self, &mut input)?;
        Ok((input, sim.discarded()))
    }

    /// Embeds `main` on the low wires with every other wire 0 and runs the
    /// circuit on the sparse backend.
    pub fn apply_to_main(&self, main: &PureState) -> Result<SparseState> {
        let state = SparseState::from_dense(main, self.num_qubits)?;
        self.simulate_sparse(state)
    }

    fn validate(&self, op: &CircuitOp) -> Result<()> {
        let mut wires = op.wires();
        wires.extend(op.controls().iter().map(|c| c.wire));
        let mut sorted = wires.clone();
        sorted.sort_unstable();
        if let Some(&w) = sorted.last().filter(|&&w| w >= self.num_qubits) {
            return Err(argument!("{} touches wire {w} of a {}-wire circuit", op.kind(), self.num_qubits));
        }
        if sorted.windows(2).any(|p| p[0] == p[1]) {
            return Err(argument!("{} uses a wire twice: {wires:?}", op.kind()));
        }
        match op {
            CircuitOp::Gate { matrix, .. } => matrix.check_unitary(ATOL),
            CircuitOp::Rotation { alpha, beta, .. } => {
                let norm = alpha.norm_sqr() + beta.norm_sqr();
                if (norm - 1.0).abs() > ATOL {
                    return Err(argument!("rotation parameters have |alpha|^2 + |beta|^2 = {norm}"));
                }
                Ok(())
            }
            CircuitOp::ZeroControl { register, .. } if register.is_empty() => Err(argument!("zero control needs a register")),
            CircuitOp::OracleCall { oracle, register, .. } if register.len() != oracle.total_wires() => Err(argument!(
                "oracle {} acts on {} wires, call maps {}",
                oracle.label(),
                oracle.total_wires(),
                register.len()
            )),
            CircuitOp::StateControl { preparer, register, targets, .. } => {
                if register.len() != preparer.num_qubits() {
                    return Err(argument!("preparer has {} wires, state control maps {}", preparer.num_qubits(), register.len()));
                }
                if targets.is_empty() {
                    return Err(argument!("state control needs a target"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

struct CachedImage {
    // Keeps the preparer alive so its address cannot be reused as a key.
    _preparer: Arc<Circuit>,
    image: Arc<SparseState>,
    discarded: f64,
    counts: Vec<(Arc<BlackBoxUnitary>, QueryCounts)>,
}

/// Executes circuits on any [`Register`] backend.
///
/// State controls are applied through the identity
/// `P M0 P^-1 = (I - |q><q|) (x) I + |q><q| (x) X` with `q = P|0>`, so a
/// preparer is only ever simulated on |0>; its image is cached per
/// simulator. Oracle counters advance exactly as the literal expansion would.
///
/// With a truncation threshold set, amplitudes at or below it are dropped
/// after every operation on a sparse register; [`Simulator::discarded`]
/// then bounds the norm of the resulting state error.
pub struct Simulator {
    images: BTreeMap<usize, CachedImage>,
    counting: bool,
    truncation: f64,
    discarded: f64,
}

impl Default for Simulator {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulator {
    pub fn new() -> Self {
        Self { images: BTreeMap::new(), counting: true, truncation: 0.0, discarded: 0.0 }
    }

    pub fn with_truncation(threshold: f64) -> Self {
        Self { truncation: threshold.max(0.0), ..Self::new() }
    }

    /// Accumulated norm of everything truncated so far.
    pub fn discarded(&self) -> f64 {
        self.discarded
    }

    pub fn run<R: Register>(&mut self, circuit: &Circuit, reg: &mut R) -> Result<()> {
        if reg.num_qubits() != circuit.num_qubits {
            return Err(argument!("circuit has {} wires, state has {}", circuit.num_qubits, reg.num_qubits()));
        }
        let map: Vec<usize> = (0..circuit.num_qubits).collect();
        self.run_mapped(circuit, reg, &map, false, &[])
    }

    pub(crate) fn run_mapped<R: Register>(&mut self, circuit: &Circuit, reg: &mut R, map: &[usize], adjoint: bool, extra: &[Control]) -> Result<()> {
        if adjoint {
            for op in circuit.ops.iter().rev() {
                self.apply_op(op, reg, map, true, extra)?;
            }
        } else {
            for op in &circuit.ops {
                self.apply_op(op, reg, map, false, extra)?;
            }
        }
        Ok(())
    }

    fn apply_op<R: Register>(&mut self, op: &CircuitOp, reg: &mut R, map: &[usize], adjoint: bool, extra: &[Control]) -> Result<()> {
        let controls: Vec<Control> = op
            .controls()
            .iter()
            .map(|c| Control { wire: map[c.wire], value: c.value })
            .chain(extra.iter().copied())
            .collect();
        let mapped = |ws: &[usize]| ws.iter().map(|&w| map[w]).collect::<Vec<_>>();
        match op {
            CircuitOp::Gate { matrix, target, .. } => {
                let m = if adjoint { matrix.adjoint() } else { *matrix };
                reg.apply_gate(&m, map[*target], &controls);
            }
            CircuitOp::Rotation { alpha, beta, adjoint: a, target, .. } => {
                let m = Matrix2::rotation(*alpha, *beta);
                let m = if *a ^ adjoint { m.adjoint() } else { m };
                reg.apply_gate(&m, map[*target], &controls);
            }
            CircuitOp::ZeroControl { register, target, .. } => {
                reg.flip_if_zero(&mapped(register), map[*target], &controls);
            }
            CircuitOp::OracleCall { oracle, adjoint: a, register, .. } => {
                let adj = *a ^ adjoint;
                if self.counting {
                    oracle.record_mode(AccessMode::new(adj, !controls.is_empty()), 1);
                }
                oracle.apply_to(self, reg, &mapped(register), adj, &controls)?;
            }
            CircuitOp::StateControl { preparer, register, targets, .. } => {
                let image = self.image(preparer)?;
                reg.flip_along(&image, &mapped(register), &mapped(targets), &controls);
            }
        }
        if self.truncation > 0.0 {
            self.discarded += reg.truncate(self.truncation);
        }
        Ok(())
    }

    fn image(&mut self, preparer: &Arc<Circuit>) -> Result<Arc<SparseState>> {
        let key = Arc::as_ptr(preparer) as usize;
        if !self.images.contains_key(&key) {
            let saved = (self.counting, self.discarded);
            self.counting = false;
            self.discarded = 0.0;
            let mut state = SparseState::zero(preparer.num_qubits)?;
            let map: Vec<usize> = (0..preparer.num_qubits).collect();
            let result = self.run_mapped(preparer, &mut state, &map, false, &[]);
            let discarded = self.discarded;
            (self.counting, self.discarded) = saved;
            result?;
            let counts = preparer.query_counts();
            self.images.insert(key, CachedImage { _preparer: preparer.clone(), image: Arc::new(state), discarded, counts });
        }
        let cached = &self.images[&key];
        // An image off by d moves the projector by at most 2d.
        self.discarded += 2.0 * cached.discarded;
        if self.counting {
            for (oracle, c) in &cached.counts {
                oracle.record(&(c.inverted() + *c));
            }
        }
        Ok(cached.image.clone())
    }
}
