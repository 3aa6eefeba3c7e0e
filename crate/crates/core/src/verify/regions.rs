use std::collections::HashMap;

use super::{Diagnostic, VerifyError};
use crate::ir::{walk_with_locs, Function, OpKind, OpLoc, Region, Value, ValueId};

/// Single-use verification for structured control flow, in one pass over
/// the region tree.
///
/// * Within a region, a second use of a qubit is a `DoubleUse`.
/// * The two branches of an `scf.if` start from the same `D`/`U` state, so
///   a qubit may be consumed once in each. Whatever either branch consumed
///   from outside is then charged to the `scf.if` itself in the parent.
/// * An `scf.for` body starts with `D = iter_args` and `U = ∅`; a qubit
///   from outside the loop used in the body is an `EscapedLoopQubit`.
///
/// On leaving a region its own definitions are dropped from both sets, so
/// every set change is undone once, keeping the walk linear in the number
/// of operations for bounded nesting depth.
///
/// Per-value state lives in a compact table indexed by value number and
/// operations are identified by their pre-order index, so the walk keeps
/// no per-operation state. The few indices that end up in diagnostics are
/// turned into [`OpLoc`]s by one final walk. Uses of values never defined
/// are ignored; the type checker reports them.
pub fn verify_single_use_regions(func: &Function) -> Result<Vec<Diagnostic>, VerifyError> {
    let mut v = RegionVerifier {
        func,
        slots: Slots::Dense(Vec::new()),
        ops: 0,
        defined: 0,
        log: Vec::new(),
        defs: Vec::new(),
        pending: Vec::new(),
    };
    if func.body.blocks.len() > 1 {
        return Err(v.malformed("multi-block region; use the CFG verifier"));
    }
    if let Some(entry) = func.body.blocks.first() {
        for a in &entry.args {
            v.define(a, 0, NONE);
        }
    }
    v.region(&func.body, 0)?;
    v.leaks(0);
    Ok(v.resolve())
}

/// Pre-order index of an operation within the function.
type Site = u32;

const NONE: u32 = u32::MAX;

const QUBIT: u8 = 1;
/// Member of `D`: defined and not yet used.
const UNUSED: u8 = 2;
/// The definition is in scope.
const LIVE: u8 = 4;

/// Everything the walk tracks about one value.
#[derive(Clone, Copy)]
struct Slot {
    /// Member of `U`: the site of the first use, or `NONE`.
    used: Site,
    /// Defining operation; `NONE` for function arguments.
    def_site: Site,
    /// Loop nesting depth of the definition.
    level: u16,
    flags: u8,
}

const EMPTY: Slot = Slot {
    used: NONE,
    def_site: NONE,
    level: 0,
    flags: 0,
};

impl Slot {
    fn has(&self, flag: u8) -> bool {
        self.flags & flag != 0
    }
}

/// Slots keyed by value number: a flat vector while the numbering is
/// dense, a hash map once it turns out not to be.
enum Slots {
    Dense(Vec<Slot>),
    Sparse(HashMap<ValueId, Slot>),
}

impl Slots {
    fn get(&self, v: ValueId) -> Slot {
        match self {
            Slots::Dense(d) => d.get(v.0 as usize).copied().unwrap_or(EMPTY),
            Slots::Sparse(h) => h.get(&v).copied().unwrap_or(EMPTY),
        }
    }

    /// The slot of `v`, created empty if needed. `defined` is the number of
    /// qubit definitions seen so far, which bounds how far a dense table
    /// may grow.
    fn get_mut(&mut self, v: ValueId, defined: usize) -> &mut Slot {
        let i = v.0 as usize;
        if let Slots::Dense(d) = self {
            if i >= d.len() && i >= 16 * defined + 1024 {
                let h = d
                    .drain(..)
                    .enumerate()
                    .filter(|(_, s)| s.has(QUBIT))
                    .map(|(j, s)| (ValueId(j as u32), s))
                    .collect();
                *self = Slots::Sparse(h);
            }
        }
        match self {
            Slots::Dense(d) => {
                if i >= d.len() {
                    d.resize((i + 1).max(2 * d.len()), EMPTY);
                }
                &mut d[i]
            }
            Slots::Sparse(h) => h.entry(v).or_insert(EMPTY),
        }
    }
}

/// A diagnostic whose sites are still pre-order indices.
enum Pending {
    DoubleUse(ValueId, Site, Site),
    Escaped(ValueId, Site),
    Leak(ValueId, Site),
}

struct RegionVerifier<'f> {
    func: &'f Function,
    slots: Slots,
    /// Operations visited so far, i.e. the next operation's site.
    ops: u32,
    /// Qubit definitions seen so far.
    defined: usize,
    /// Rollback log `B`: every insertion into `U`, in order.
    log: Vec<ValueId>,
    /// Qubit definitions currently in scope, in order.
    defs: Vec<ValueId>,
    pending: Vec<Pending>,
}

impl RegionVerifier<'_> {
    fn malformed(&self, reason: &str) -> VerifyError {
        VerifyError::MalformedRegion {
            func: self.func.name.clone(),
            reason: reason.into(),
        }
    }

    fn slot_mut(&mut self, v: ValueId) -> &mut Slot {
        self.slots.get_mut(v, self.defined)
    }

    fn define(&mut self, v: &Value, level: usize, site: Site) {
        if !v.ty.is_qubit() {
            return;
        }
        self.defined += 1;
        *self.slot_mut(v.id) = Slot {
            used: NONE,
            def_site: site,
            // Nesting this deep would exhaust the stack long before.
            level: u16::try_from(level).unwrap_or(u16::MAX),
            flags: QUBIT | UNUSED | LIVE,
        };
        self.defs.push(v.id);
    }

    /// Adds `v` to `U` and removes it from `D`.
    fn mark_used(&mut self, v: ValueId, site: Site) {
        let slot = self.slot_mut(v);
        slot.used = site;
        slot.flags &= !UNUSED;
        self.log.push(v);
    }

    fn use_value(&mut self, v: ValueId, level: usize, site: Site) {
        let slot = self.slots.get(v);
        if !slot.has(QUBIT) {
            return;
        }
        if slot.used != NONE {
            self.pending.push(Pending::DoubleUse(v, slot.used, site));
            return;
        }
        if slot.has(LIVE) && usize::from(slot.level) < level {
            self.pending.push(Pending::Escaped(v, site));
        }
        self.mark_used(v, site);
    }

    /// Removes `v` from `U`, returning its use site.
    fn take_use(&mut self, v: ValueId) -> Option<Site> {
        let slot = self.slot_mut(v);
        let site = std::mem::replace(&mut slot.used, NONE);
        (site != NONE).then_some(site)
    }

    /// Undoes all uses logged since `mark`, returning them (value and site).
    fn rollback(&mut self, mark: usize) -> Vec<(ValueId, Site)> {
        let undone: Vec<ValueId> = self.log.drain(mark..).collect();
        undone
            .into_iter()
            .filter_map(|v| {
                let site = self.take_use(v)?;
                let slot = self.slot_mut(v);
                if slot.has(LIVE) {
                    slot.flags |= UNUSED;
                }
                Some((v, site))
            })
            .collect()
    }

    /// Reports and forgets qubits defined since `def_mark` that were never
    /// used.
    fn leaks(&mut self, def_mark: usize) {
        let defs: Vec<ValueId> = self.defs.drain(def_mark..).collect();
        for v in defs {
            let slot = self.slot_mut(v);
            let leaked = slot.has(UNUSED);
            let site = slot.def_site;
            *slot = Slot { flags: QUBIT, ..EMPTY };
            if leaked {
                self.pending.push(Pending::Leak(v, site));
            }
        }
    }

    fn region(&mut self, region: &Region, level: usize) -> Result<(), VerifyError> {
        let Some(block) = region.blocks.first() else {
            return Ok(());
        };
        if region.blocks.len() > 1 {
            return Err(self.malformed("multi-block region; use the CFG verifier"));
        }
        for op in &block.ops {
            let site = self.ops;
            self.ops += 1;
            match &op.kind {
                OpKind::Br | OpKind::CondBr => return Err(self.malformed("unstructured branch inside a region")),
                OpKind::ScfIf => {
                    for &v in &op.operands {
                        self.use_value(v, level, site);
                    }
                    let mut consumed: Vec<(ValueId, Site)> = Vec::new();
                    for r in &op.regions {
                        let mark = self.log.len();
                        let def_mark = self.defs.len();
                        self.region(r, level)?;
                        self.leaks(def_mark);
                        for (v, use_site) in self.rollback(mark) {
                            // Everything defined before the scf.if has a
                            // smaller site.
                            let slot = self.slots.get(v);
                            let outer = !slot.has(LIVE) || slot.def_site == NONE || slot.def_site < site;
                            if outer && !consumed.iter().any(|(c, _)| *c == v) {
                                consumed.push((v, use_site));
                            }
                        }
                    }
                    // The scf.if consumes everything either branch took from
                    // outside; escape errors were already reported inside.
                    for (v, use_site) in consumed {
                        let first = self.slots.get(v).used;
                        if first != NONE {
                            self.pending.push(Pending::DoubleUse(v, first, use_site));
                            continue;
                        }
                        self.mark_used(v, use_site);
                    }
                }
                OpKind::ScfFor => {
                    for &v in &op.operands {
                        self.use_value(v, level, site);
                    }
                    // The body starts with an empty `U`; uses from before
                    // the loop are parked and restored afterwards.
                    let saved_log = std::mem::take(&mut self.log);
                    let saved_used: Vec<(ValueId, Site)> =
                        saved_log.iter().filter_map(|&v| self.take_use(v).map(|s| (v, s))).collect();
                    let def_mark = self.defs.len();
                    let inner = level + 1;
                    for r in &op.regions {
                        if let Some(b) = r.blocks.first() {
                            for a in &b.args {
                                self.define(a, inner, site);
                            }
                        }
                    }
                    for r in &op.regions {
                        self.region(r, inner)?;
                    }
                    self.leaks(def_mark);
                    // Outer values used in the body were reported as escaped;
                    // they are also consumed by the loop in the parent.
                    let body_log = std::mem::replace(&mut self.log, saved_log);
                    let body_used: Vec<(ValueId, Site)> =
                        body_log.iter().filter_map(|&v| self.take_use(v).map(|s| (v, s))).collect();
                    for (v, use_site) in saved_used {
                        self.slot_mut(v).used = use_site;
                    }
                    for (v, use_site) in body_used {
                        let slot = self.slots.get(v);
                        if slot.has(LIVE) && slot.used == NONE {
                            self.mark_used(v, use_site);
                        }
                    }
                }
                _ => {
                    if !op.regions.is_empty() {
                        return Err(self.malformed(&format!("unsupported region-carrying op `{}`", op.kind.name())));
                    }
                    for v in op.all_uses() {
                        self.use_value(v, level, site);
                    }
                }
            }
            for r in &op.results {
                self.define(r, level, site);
            }
        }
        Ok(())
    }

    /// Turns the pending diagnostics into [`Diagnostic`]s, locating all
    /// their sites in one walk.
    fn resolve(self) -> Vec<Diagnostic> {
        let mut wanted: Vec<Site> = Vec::new();
        for p in &self.pending {
            match *p {
                Pending::DoubleUse(_, a, b) => wanted.extend([a, b]),
                Pending::Escaped(_, s) | Pending::Leak(_, s) => wanted.push(s),
            }
        }
        wanted.retain(|&s| s != NONE);
        wanted.sort_unstable();
        wanted.dedup();
        let mut locs: Vec<OpLoc> = Vec::with_capacity(wanted.len());
        if !wanted.is_empty() {
            let mut index: Site = 0;
            walk_with_locs(self.func, &mut |loc, _| {
                if wanted.get(locs.len()) == Some(&index) {
                    locs.push(loc.clone());
                }
                index += 1;
            });
        }
        let loc = |s: Site| wanted.binary_search(&s).ok().and_then(|i| locs.get(i)).cloned();
        self.pending
            .into_iter()
            .filter_map(|p| {
                Some(match p {
                    Pending::DoubleUse(v, a, b) => Diagnostic::double_use(v, loc(a)?, loc(b)?),
                    Pending::Escaped(v, s) => Diagnostic::escaped(v, loc(s)?),
                    Pending::Leak(v, s) => Diagnostic::leak(v, loc(s)),
                })
            })
            .collect()
    }
}
