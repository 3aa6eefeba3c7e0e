use std::collections::BTreeMap;

use super::{walk_with_locs, Module, OpLoc, ValueId};

/// One use of a value: the using operation and the operand slot. Successor
/// arguments are numbered after the regular operands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Use {
    pub loc: OpLoc,
    pub slot: usize,
}

/// Use lists for every value of every function, in program order.
#[derive(Clone, Debug, Default)]
pub struct DefUseIndex {
    funcs: BTreeMap<String, BTreeMap<ValueId, Vec<Use>>>,
}

impl DefUseIndex {
    pub fn uses(&self, func: &str, value: ValueId) -> &[Use] {
        self.funcs
            .get(func)
            .and_then(|m| m.get(&value))
            .map_or(&[], Vec::as_slice)
    }

    pub fn function(&self, func: &str) -> Option<&BTreeMap<ValueId, Vec<Use>>> {
        self.funcs.get(func)
    }
}

pub fn def_use_index(module: &Module) -> DefUseIndex {
    let mut funcs = BTreeMap::new();
    for func in &module.functions {
        let mut map: BTreeMap<ValueId, Vec<Use>> = BTreeMap::new();
        func.body.walk_defs(&mut |v| {
            map.entry(v.id).or_default();
        });
        walk_with_locs(func, &mut |loc, op| {
            for (slot, v) in op.all_uses().enumerate() {
                map.entry(v).or_default().push(Use { loc: loc.clone(), slot });
            }
        });
        funcs.insert(func.name.clone(), map);
    }
    DefUseIndex { funcs }
}
