use std::fmt;

/// Width of a qubit array or bit tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Size {
    Static(u32),
    Dynamic,
}

impl Size {
    pub fn as_static(self) -> Option<u32> {
        match self {
            Size::Static(n) => Some(n),
            Size::Dynamic => None,
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Size::Static(n) => write!(f, "{n}"),
            Size::Dynamic => f.write_str("?"),
        }
    }
}

/// Semantic type of an SSA value.
///
/// Textual forms: `qubit<N>`, `qubit<?>`, `i64`, `i1`, `f64`, `bits<N>` (the
/// bit tensor returned by measurement) and `mem<N>` (a classical bit
/// register that measurement results are stored into).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Type {
    Qubit(Size),
    Int,
    Bool,
    Angle,
    Bits(Size),
    BitMem(u32),
}

impl Type {
    pub const QUBIT: Type = Type::Qubit(Size::Static(1));

    pub fn qubits(n: u32) -> Type {
        Type::Qubit(Size::Static(n))
    }

    pub fn is_qubit(&self) -> bool {
        matches!(self, Type::Qubit(_))
    }

    pub fn qubit_size(&self) -> Option<Size> {
        match self {
            Type::Qubit(s) => Some(*s),
            _ => None,
        }
    }

    /// Static qubit width, `None` for non-qubit or dynamic types.
    pub fn qubit_width(&self) -> Option<u32> {
        self.qubit_size().and_then(Size::as_static)
    }

    /// Rejects zero-width static sizes.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Type::Qubit(Size::Static(n)) | Type::Bits(Size::Static(n)) | Type::BitMem(n) => *n >= 1,
            _ => true,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Qubit(s) => write!(f, "qubit<{s}>"),
            Type::Int => f.write_str("i64"),
            Type::Bool => f.write_str("i1"),
            Type::Angle => f.write_str("f64"),
            Type::Bits(s) => write!(f, "bits<{s}>"),
            Type::BitMem(n) => write!(f, "mem<{n}>"),
        }
    }
}
