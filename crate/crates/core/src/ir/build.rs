use super::op::CmpPredicate;
use super::{Attr, Attrs, OpKind, Operation, Region, Size, Type, Value, ValueAllocator, ValueId};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("type error in {op}: {message}")]
pub struct TypeError {
    pub op: String,
    pub message: String,
}

impl TypeError {
    fn new(kind: &OpKind, message: impl Into<String>) -> Self {
        let op = match kind {
            OpKind::Call(callee) => format!("call @{callee}"),
            k => k.name().to_string(),
        };
        TypeError {
            op,
            message: message.into(),
        }
    }
}

/// Creates an operation with freshly minted result values and checks it
/// against the type rules.
///
/// `result_types` may be left empty for kinds whose results are fully
/// determined by their operands and attributes.
pub fn build_op(
    kind: OpKind,
    operands: &[Value],
    result_types: &[Type],
    attrs: Attrs,
    regions: Vec<Region>,
    ids: &mut ValueAllocator,
) -> Result<Operation, TypeError> {
    build_op_scoped(kind, operands, result_types, attrs, regions, ids, &|_| None)
}

/// Like [`build_op`], with `outer` resolving values that the op's regions
/// capture from enclosing scopes.
pub fn build_op_scoped(
    kind: OpKind,
    operands: &[Value],
    result_types: &[Type],
    attrs: Attrs,
    regions: Vec<Region>,
    ids: &mut ValueAllocator,
    outer: &dyn Fn(ValueId) -> Option<Type>,
) -> Result<Operation, TypeError> {
    let operand_types: Vec<Type> = operands.iter().map(|v| v.ty).collect();
    let types = if result_types.is_empty() {
        infer_result_types(&kind, &operand_types, &attrs).unwrap_or_default()
    } else {
        result_types.to_vec()
    };
    let op = Operation {
        kind,
        operands: operands.iter().map(|v| v.id).collect(),
        results: types.into_iter().map(|t| ids.value(t)).collect(),
        attrs,
        regions,
        successors: Vec::new(),
    };
    let lookup = |id: ValueId| operands.iter().find(|v| v.id == id).map(|v| v.ty);
    check_op(&op, &|id| {
        lookup(id).or_else(|| {
            // values defined inside the op's own regions
            let mut found = None;
            for r in &op.regions {
                r.walk_defs(&mut |v| {
                    if v.id == id {
                        found = Some(v.ty);
                    }
                });
            }
            found.or_else(|| outer(id))
        })
    })?;
    Ok(op)
}

/// Result types implied by the operands, where the rules determine them.
pub fn infer_result_types(kind: &OpKind, operands: &[Type], attrs: &Attrs) -> Option<Vec<Type>> {
    use OpKind::*;
    Some(match kind {
        CNOT => vec![Type::QUBIT; 2],
        k if k.is_single_qubit_gate() => vec![Type::QUBIT],
        Gate | Barrier => operands.iter().copied().filter(Type::is_qubit).collect(),
        Reset => vec![Type::QUBIT],
        Measure => {
            let s = operands.first()?.qubit_size()?;
            vec![Type::Bits(s), Type::Qubit(s)]
        }
        Concat => match (operands.first()?.qubit_size()?, operands.get(1)?.qubit_size()?) {
            (Size::Static(a), Size::Static(b)) => vec![Type::qubits(a + b)],
            _ => vec![Type::Qubit(Size::Dynamic)],
        },
        Dim => vec![Type::Int, *operands.first()?],
        ConstInt | AddI | SubI | MulI | MemLoadBit => vec![Type::Int],
        ConstAngle => vec![Type::Angle],
        CmpI => vec![Type::Bool],
        MemAllocBit => vec![Type::BitMem(attrs.get("size")?.as_int()? as u32)],
        MemStoreBit | Return | Yield | Br | CondBr => vec![],
        _ => return None,
    })
}

/// Checks an operation against the type rules. `type_of` resolves operand
/// types (and values defined inside the op's regions).
pub fn check_op(op: &Operation, type_of: &dyn Fn(ValueId) -> Option<Type>) -> Result<(), TypeError> {
    use OpKind::*;
    let err = |m: String| Err(TypeError::new(&op.kind, m));
    let mut ops = Vec::with_capacity(op.operands.len());
    for &v in &op.operands {
        match type_of(v) {
            Some(t) => ops.push(t),
            None => return err(format!("operand {v} is not defined")),
        }
    }
    let res: Vec<Type> = op.results.iter().map(|v| v.ty).collect();
    for t in ops.iter().chain(&res) {
        if !t.is_well_formed() {
            return err(format!("malformed type {t}"));
        }
    }
    let sig = || format!("({}) -> ({})", join(&ops), join(&res));
    if !matches!(op.kind, ScfIf | ScfFor) && !op.regions.is_empty() {
        return err("unexpected regions".into());
    }
    if !matches!(op.kind, Br | CondBr) && !op.successors.is_empty() {
        return err("only branches take successors".into());
    }

    match &op.kind {
        Alloc => match (ops.as_slice(), res.as_slice()) {
            ([], [Type::Qubit(Size::Static(_))]) => {}
            ([Type::Int], [Type::Qubit(Size::Dynamic)]) => {}
            _ => return err(format!("expected () -> qubit<N> or (i64) -> qubit<?>, got {}", sig())),
        },
        k if k.is_single_qubit_gate() => {
            let n = k.angle_count();
            let static_angles = op.static_angles().is_some();
            let expected_angle_operands = if static_angles { 0 } else { n };
            if n > 0 && !static_angles && k.angle_attr_names().iter().any(|a| op.attrs.contains_key(*a)) {
                return err("angles must be given all as attributes or all as operands".into());
            }
            let qubit_ok = ops.first() == Some(&Type::QUBIT);
            let angles_ok = ops.len() == 1 + expected_angle_operands && ops.iter().skip(1).all(|t| *t == Type::Angle);
            if !qubit_ok || !angles_ok || res != [Type::QUBIT] {
                return err(format!(
                    "expected (qubit<1>{}) -> (qubit<1>), got {}",
                    ", f64".repeat(expected_angle_operands),
                    sig()
                ));
            }
        }
        CNOT => {
            if ops != [Type::QUBIT; 2] || res != [Type::QUBIT; 2] {
                return err(format!("expected (qubit<1>, qubit<1>) -> (qubit<1>, qubit<1>), got {}", sig()));
            }
        }
        Gate => {
            let Some(m) = op.attrs.get("matrix").and_then(Attr::as_matrix) else {
                return err("missing matrix attribute".into());
            };
            let Some(k) = m.num_qubits().filter(|k| *k >= 1) else {
                return err(format!("matrix dimension {} is not a power of two", m.dim()));
            };
            if !m.is_unitary(1e-9) {
                return err(format!("matrix is not unitary (error {:.3e})", m.unitarity_error()));
            }
            let mut width = 0;
            for t in &ops {
                match t.qubit_width() {
                    Some(w) => width += w,
                    None => return err(format!("operands must be static qubit arrays, got {}", sig())),
                }
            }
            if width != k {
                return err(format!("matrix acts on {k} qubits but operands have {width}"));
            }
            if res != ops {
                return err(format!("results must mirror operands, got {}", sig()));
            }
        }
        Measure => match (ops.as_slice(), res.as_slice()) {
            ([Type::Qubit(s)], [Type::Bits(b), Type::Qubit(q)]) if s == b && s == q => {}
            _ => return err(format!("expected (qubit<n>) -> (bits<n>, qubit<n>), got {}", sig())),
        },
        Split => {
            let (input, sizes_given) = match ops.as_slice() {
                [Type::Qubit(s)] => (*s, false),
                [Type::Qubit(s), Type::Int, Type::Int] => (*s, true),
                _ => return err(format!("expected (qubit<n>) -> (qubit<a>, qubit<b>), got {}", sig())),
            };
            let [Type::Qubit(a), Type::Qubit(b)] = res.as_slice() else {
                return err(format!("expected (qubit<n>) -> (qubit<a>, qubit<b>), got {}", sig()));
            };
            match (input, a, b) {
                (Size::Static(n), Size::Static(x), Size::Static(y)) => {
                    if x + y != n {
                        return err(format!("split sizes {x} + {y} do not sum to {n}"));
                    }
                }
                _ if sizes_given => {}
                _ => return err("dynamic split needs two i64 size operands".into()),
            }
        }
        Concat => match (ops.as_slice(), res.as_slice()) {
            ([Type::Qubit(a), Type::Qubit(b)], [Type::Qubit(r)]) => match (a, b, r) {
                (Size::Static(x), Size::Static(y), Size::Static(z)) if x + y == *z => {}
                (Size::Static(x), Size::Static(y), Size::Static(z)) => {
                    return err(format!("concat sizes {x} + {y} do not sum to {z}"));
                }
                (Size::Static(_), Size::Static(_), Size::Dynamic) => {
                    return err("concat of static arrays has a static result".into())
                }
                (_, _, Size::Dynamic) => {}
                _ => return err("concat with a dynamic input has a dynamic result".into()),
            },
            _ => return err(format!("expected (qubit<a>, qubit<b>) -> qubit<a+b>, got {}", sig())),
        },
        Dim => match (ops.as_slice(), res.as_slice()) {
            ([q @ Type::Qubit(_)], [Type::Int, r]) if q == r => {}
            _ => return err(format!("expected (qubit<?>) -> (i64, qubit<?>), got {}", sig())),
        },
        Cast => match (ops.as_slice(), res.as_slice()) {
            ([Type::Qubit(a)], [Type::Qubit(b)]) => match (a, b) {
                (Size::Static(x), Size::Static(y)) if x != y => {
                    return err(format!("static cast must preserve size ({x} vs {y})"));
                }
                (Size::Dynamic, Size::Dynamic) => return err("cast between two dynamic types".into()),
                _ => {}
            },
            _ => return err(format!("expected (qubit<T1>) -> (qubit<T2>), got {}", sig())),
        },
        Barrier => {
            if ops.is_empty() || !ops.iter().all(Type::is_qubit) || res != ops {
                return err(format!("expected qubit operands mirrored as results, got {}", sig()));
            }
        }
        Reset => {
            if ops != [Type::QUBIT] || res != [Type::QUBIT] {
                return err(format!("expected (qubit<1>) -> (qubit<1>), got {}", sig()));
            }
        }
        Call(_) | Return => {}
        Yield => {
            if !res.is_empty() {
                return err("yield has no results".into());
            }
        }
        ScfIf => {
            if ops != [Type::Bool] {
                return err(format!("condition must be i1, got {}", sig()));
            }
            if op.regions.len() != 2 {
                return err("expected then and else regions".into());
            }
            for r in &op.regions {
                check_yield_region(op, r, &[], &res, type_of)?;
            }
        }
        ScfFor => {
            if ops.len() < 3 || ops[..3] != [Type::Int; 3] {
                return err(format!("expected (i64, i64, i64, iter_args...), got {}", sig()));
            }
            if ops[3..] != res[..] {
                return err(format!("results must match iter_args, got {}", sig()));
            }
            if op.regions.len() != 1 {
                return err("expected one body region".into());
            }
            let mut args = vec![Type::Int];
            args.extend_from_slice(&res);
            check_yield_region(op, &op.regions[0], &args, &res, type_of)?;
        }
        ConstInt => {
            if op.attr_int("value").is_none() || !ops.is_empty() || res != [Type::Int] {
                return err("expected () -> (i64) with integer `value`".into());
            }
        }
        ConstAngle => {
            if op.attr_float("value").is_none() || !ops.is_empty() || res != [Type::Angle] {
                return err("expected () -> (f64) with float `value`".into());
            }
        }
        AddI | SubI | MulI => {
            if ops != [Type::Int; 2] || res != [Type::Int] {
                return err(format!("expected (i64, i64) -> (i64), got {}", sig()));
            }
        }
        CmpI => {
            if ops != [Type::Int; 2] || res != [Type::Bool] {
                return err(format!("expected (i64, i64) -> (i1), got {}", sig()));
            }
            if op.attr_int("predicate").and_then(CmpPredicate::from_i64).is_none() {
                return err("missing or invalid `predicate`".into());
            }
        }
        MemAllocBit => match (ops.as_slice(), res.as_slice()) {
            ([], [Type::BitMem(_)]) => {}
            _ => return err(format!("expected () -> (mem<n>), got {}", sig())),
        },
        MemStoreBit => match ops.as_slice() {
            [Type::BitMem(n), Type::Bits(Size::Static(1))] if res.is_empty() => check_index(op, *n)?,
            _ => return err(format!("expected (mem<n>, bits<1>) -> (), got {}", sig())),
        },
        MemLoadBit => match (ops.as_slice(), res.as_slice()) {
            ([Type::BitMem(n)], [Type::Int]) => check_index(op, *n)?,
            _ => return err(format!("expected (mem<n>) -> (i64), got {}", sig())),
        },
        Br => {
            if !ops.is_empty() || op.successors.len() != 1 || !res.is_empty() {
                return err("expected one successor and no operands".into());
            }
        }
        CondBr => {
            if ops != [Type::Bool] || op.successors.len() != 2 || !res.is_empty() {
                return err("expected an i1 condition and two successors".into());
            }
        }
        _ => unreachable!("all kinds covered"),
    }
    Ok(())
}

fn check_index(op: &Operation, size: u32) -> Result<(), TypeError> {
    match op.attr_int("index") {
        Some(i) if i >= 0 && (i as u64) < size as u64 => Ok(()),
        Some(i) => Err(TypeError::new(&op.kind, format!("bit index {i} out of range for mem<{size}>"))),
        None => Err(TypeError::new(&op.kind, "missing `index`")),
    }
}

fn check_yield_region(
    op: &Operation,
    region: &Region,
    args: &[Type],
    results: &[Type],
    type_of: &dyn Fn(ValueId) -> Option<Type>,
) -> Result<(), TypeError> {
    let err = |m: &str| Err(TypeError::new(&op.kind, m));
    let [block] = region.blocks.as_slice() else {
        return err("regions must have exactly one block");
    };
    if block.args.iter().map(|v| v.ty).collect::<Vec<_>>() != args {
        return err("region block arguments do not match");
    }
    let Some(term) = block.ops.last().filter(|t| t.kind == OpKind::Yield) else {
        return err("region must end in scf.yield");
    };
    let yielded: Option<Vec<Type>> = term.operands.iter().map(|v| type_of(*v)).collect();
    if yielded.as_deref() != Some(results) {
        return err("yielded types do not match results");
    }
    Ok(())
}

fn join(ts: &[Type]) -> String {
    ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(id: u32, ty: Type) -> Value {
        Value::new(ValueId(id), ty)
    }

    #[test]
    fn split_three_into_two_and_one() {
        let mut ids = ValueAllocator::starting_at(1);
        let op = build_op(
            OpKind::Split,
            &[val(0, Type::qubits(3))],
            &[Type::qubits(2), Type::qubits(1)],
            Attrs::new(),
            vec![],
            &mut ids,
        )
        .unwrap();
        assert_eq!(op.results[0].ty, Type::qubits(2));
        assert_eq!(op.results[1].ty, Type::qubits(1));
        assert_ne!(op.results[0].id, op.results[1].id);
    }

    #[test]
    fn equal_size_static_cast_accepted() {
        let mut ids = ValueAllocator::starting_at(1);
        build_op(OpKind::Cast, &[val(0, Type::qubits(3))], &[Type::qubits(3)], Attrs::new(), vec![], &mut ids).unwrap();
    }

    #[test]
    fn concat_size_mismatch_rejected() {
        let mut ids = ValueAllocator::starting_at(2);
        let e = build_op(
            OpKind::Concat,
            &[val(0, Type::qubits(2)), val(1, Type::qubits(2))],
            &[Type::qubits(3)],
            Attrs::new(),
            vec![],
            &mut ids,
        )
        .unwrap_err();
        assert!(e.message.contains("2 + 2"), "{e}");
    }

    #[test]
    fn split_must_sum() {
        let mut ids = ValueAllocator::starting_at(1);
        assert!(build_op(
            OpKind::Split,
            &[val(0, Type::qubits(3))],
            &[Type::qubits(3), Type::qubits(1)],
            Attrs::new(),
            vec![],
            &mut ids
        )
        .is_err());
    }

    #[test]
    fn gate_requires_unitary_matrix() {
        use crate::linalg::{CMatrix, C64};
        let mut ids = ValueAllocator::starting_at(1);
        let bad = CMatrix::from_rows(vec![vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]]);
        let mut attrs = Attrs::new();
        attrs.insert("matrix".into(), Attr::Matrix(bad));
        assert!(build_op(OpKind::Gate, &[val(0, Type::QUBIT)], &[], attrs, vec![], &mut ids).is_err());
        let mut attrs = Attrs::new();
        attrs.insert("matrix".into(), Attr::Matrix(crate::linalg::gates::cnot()));
        let op = build_op(OpKind::Gate, &[val(0, Type::qubits(2))], &[], attrs, vec![], &mut ids).unwrap();
        assert_eq!(op.results[0].ty, Type::qubits(2));
    }

    #[test]
    fn measure_signature() {
        let mut ids = ValueAllocator::starting_at(1);
        let op = build_op(OpKind::Measure, &[val(0, Type::qubits(3))], &[], Attrs::new(), vec![], &mut ids).unwrap();
        assert_eq!(op.results[0].ty, Type::Bits(Size::Static(3)));
        assert_eq!(op.results[1].ty, Type::qubits(3));
    }

    #[test]
    fn cast_between_dynamic_and_static() {
        let mut ids = ValueAllocator::starting_at(1);
        build_op(OpKind::Cast, &[val(0, Type::qubits(3))], &[Type::Qubit(Size::Dynamic)], Attrs::new(), vec![], &mut ids).unwrap();
        assert!(build_op(OpKind::Cast, &[val(0, Type::qubits(3))], &[Type::qubits(2)], Attrs::new(), vec![], &mut ids).is_err());
    }
}
