//! The QSSA intermediate representation.
//!
//! Qubits are SSA values with value semantics: every gate consumes its qubit
//! operands and defines fresh qubit results that refer to the same physical
//! qubits. A program is a [`Module`] of [`Function`]s whose bodies are
//! [`Region`]s of [`Block`]s. Structured control flow (`scf.if`, `scf.for`)
//! nests regions inside operations; plain branches (`cf.br`, `cf.cond_br`)
//! build flat CFGs.

mod build;
mod def_use;
mod op;
mod parse;
mod print;
mod types;

use std::collections::BTreeMap;

pub use build::{build_op, build_op_scoped, check_op, infer_result_types, TypeError};
pub use def_use::{def_use_index, DefUseIndex, Use};
pub use op::{gate_matrix, Attr, Attrs, CmpPredicate, Effect, OpKind, Operation, Successor};
pub use parse::{parse_ir, parse_ir_with_locations, IrParseError, SourceMap};
pub use print::{print_function, print_ir, print_ir_with_lines};
pub use types::{Size, Type};

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub struct ValueId(pub u32);

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

/// A definition: block argument or operation result.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Value {
    pub id: ValueId,
    pub ty: Type,
}

impl Value {
    pub fn new(id: ValueId, ty: Type) -> Self {
        Value { id, ty }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Block {
    pub args: Vec<Value>,
    pub ops: Vec<Operation>,
}

impl Block {
    pub fn new(args: Vec<Value>, ops: Vec<Operation>) -> Self {
        Block { args, ops }
    }

    pub fn terminator(&self) -> Option<&Operation> {
        self.ops.last().filter(|op| op.kind.is_terminator())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Region {
    pub blocks: Vec<Block>,
}

impl Region {
    pub fn new(blocks: Vec<Block>) -> Self {
        Region { blocks }
    }

    pub fn single(block: Block) -> Self {
        Region { blocks: vec![block] }
    }

    pub fn entry(&self) -> Option<&Block> {
        self.blocks.first()
    }

    /// Visits every operation in this region and all nested regions, in
    /// program order (an operation before the contents of its regions).
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Operation)) {
        for block in &self.blocks {
            for op in &block.ops {
                f(op);
                for r in &op.regions {
                    r.walk(f);
                }
            }
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Operation)) {
        for block in &mut self.blocks {
            for op in &mut block.ops {
                f(op);
                for r in &mut op.regions {
                    r.walk_mut(f);
                }
            }
        }
    }

    /// Visits every definition (block args and results) in program order.
    pub fn walk_defs<'a>(&'a self, f: &mut impl FnMut(&'a Value)) {
        for block in &self.blocks {
            block.args.iter().for_each(&mut *f);
            for op in &block.ops {
                op.results.iter().for_each(&mut *f);
                for r in &op.regions {
                    r.walk_defs(f);
                }
            }
        }
    }

    pub fn op_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub name: String,
    pub inputs: Vec<Type>,
    pub outputs: Vec<Type>,
    pub body: Region,
}

impl Function {
    pub fn new(name: impl Into<String>, inputs: Vec<Type>, outputs: Vec<Type>, body: Region) -> Self {
        Function {
            name: name.into(),
            inputs,
            outputs,
            body,
        }
    }

    /// Map from every defined value to its type.
    pub fn value_types(&self) -> BTreeMap<ValueId, Type> {
        let mut m = BTreeMap::new();
        self.body.walk_defs(&mut |v| {
            m.insert(v.id, v.ty);
        });
        m
    }

    /// An allocator for values that are not yet defined in this function.
    pub fn value_allocator(&self) -> ValueAllocator {
        let mut next = 0;
        self.body.walk_defs(&mut |v| next = next.max(v.id.0 + 1));
        ValueAllocator { next }
    }

    pub fn is_single_block(&self) -> bool {
        fn check(r: &Region) -> bool {
            r.blocks.len() == 1 && r.blocks[0].ops.iter().all(|op| op.regions.iter().all(check))
        }
        check(&self.body)
    }
}

#[derive(Clone, Debug)]
pub struct ValueAllocator {
    next: u32,
}

impl ValueAllocator {
    pub fn starting_at(next: u32) -> Self {
        ValueAllocator { next }
    }

    pub fn fresh(&mut self) -> ValueId {
        let id = ValueId(self.next);
        self.next += 1;
        id
    }

    pub fn value(&mut self, ty: Type) -> Value {
        Value::new(self.fresh(), ty)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Module {
    pub functions: Vec<Function>,
}

impl Module {
    pub fn new(functions: Vec<Function>) -> Self {
        Module { functions }
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_mut(&mut self, name: &str) -> Option<&mut Function> {
        self.functions.iter_mut().find(|f| f.name == name)
    }

    pub fn main(&self) -> Option<&Function> {
        self.function("main")
    }
}

/// Location of an operation: function name plus the `(region, block, op)`
/// index path from the function body down to the operation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct OpLoc {
    pub func: String,
    pub path: Vec<(usize, usize, usize)>,
}

impl OpLoc {
    pub fn new(func: impl Into<String>) -> Self {
        OpLoc {
            func: func.into(),
            path: Vec::new(),
        }
    }

    pub fn child(&self, region: usize, block: usize, op: usize) -> Self {
        let mut path = self.path.clone();
        path.push((region, block, op));
        OpLoc {
            func: self.func.clone(),
            path,
        }
    }
}

impl fmt::Display for OpLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.func)?;
        for (r, b, o) in &self.path {
            write!(f, "/{r}.{b}.{o}")?;
        }
        Ok(())
    }
}

/// Resolves an [`OpLoc`] to its operation.
pub fn op_at<'a>(module: &'a Module, loc: &OpLoc) -> Option<&'a Operation> {
    let func = module.function(&loc.func)?;
    let mut region = &func.body;
    let mut found = None;
    for &(r, b, o) in &loc.path {
        if let Some(op) = found {
            let op: &Operation = op;
            region = op.regions.get(r)?;
        } else if r != 0 {
            return None;
        }
        found = Some(region.blocks.get(b)?.ops.get(o)?);
    }
    found
}

/// Calls `f` with the location of every operation in the function.
pub fn walk_with_locs<'a>(func: &'a Function, f: &mut impl FnMut(&OpLoc, &'a Operation)) {
    fn go<'a>(region: &'a Region, ri: usize, parent: &OpLoc, f: &mut impl FnMut(&OpLoc, &'a Operation)) {
        for (bi, block) in region.blocks.iter().enumerate() {
            for (oi, op) in block.ops.iter().enumerate() {
                let loc = parent.child(ri, bi, oi);
                f(&loc, op);
                for (rj, r) in op.regions.iter().enumerate() {
                    go(r, rj, &loc, f);
                }
            }
        }
    }
    go(&func.body, 0, &OpLoc::new(func.name.clone()), f);
}
