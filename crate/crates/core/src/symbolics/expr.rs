use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Abs,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
        }
    }
}

/// Expression tree. Variables are indices into the owning [`Expr`]'s declared list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            // Negative literals only arise programmatically and print parenthesized.
            Node::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => PREC_NEG,
            Node::Num(_) | Node::Var(_) | Node::Call(..) => PREC_ATOM,
            Node::Neg(_) => PREC_NEG,
            Node::Bin(op, ..) => op.precedence(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Node::Num(v) if *v == 0.0)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Num(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(a) | Node::Call(_, a) => a.max_var(),
            Node::Bin(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    fn contains_abs(&self) -> bool {
        match self {
            Node::Num(_) | Node::Var(_) => false,
            Node::Call(Func::Abs, _) => true,
            Node::Neg(a) | Node::Call(_, a) => a.contains_abs(),
            Node::Bin(_, a, b) => a.contains_abs() || b.contains_abs(),
        }
    }

    fn write(&self, vars: &[String], out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    write!(out, "-{:?}", -v)
                } else {
                    write!(out, "{v:?}")
                }
            }
            Node::Var(i) => write!(out, "{}", vars[*i]),
            Node::Neg(a) => {
                out.write_str("-")?;
                write_child(a, a.precedence() < PREC_NEG, vars, out)
            }
            Node::Call(f, a) => {
                write!(out, "{}(", f.name())?;
                a.write(vars, out)?;
                out.write_str(")")
            }
            Node::Bin(op, a, b) => {
                let p = op.precedence();
                let (left_paren, right_paren) = match op {
                    // `^` is right-associative and its exponent is parsed as a unary.
                    BinOp::Pow => (a.precedence() <= p, b.precedence() < PREC_NEG),
                    _ => (a.precedence() < p, b.precedence() <= p),
                };
                write_child(a, left_paren, vars, out)?;
                write!(out, " {} ", op.symbol())?;
                write_child(b, right_paren, vars, out)
            }
        }
    }
}

fn write_child(
    node: &Node,
    paren: bool,
    vars: &[String],
    out: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    if paren {
        out.write_str("(")?;
        node.write(vars, out)?;
        out.write_str(")")
    } else {
        node.write(vars, out)
    }
}

/// A parsed scalar expression together with its declared variable list.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub(crate) node: Node,
    pub(crate) vars: Arc<[String]>,
}

impl Expr {
    /// Wraps a node; panics if it references an undeclared variable index.
    pub fn from_node(node: Node, vars: Arc<[String]>) -> Expr {
        if let Some(i) = node.max_var() {
            assert!(i < vars.len(), "variable index {i} out of range");
        }
        Expr { node, vars }
    }

    pub fn constant(value: f64, vars: Arc<[String]>) -> Expr {
        Expr { node: Node::Num(value), vars }
    }

    pub fn zero(vars: Arc<[String]>) -> Expr {
        Expr::constant(0.0, vars)
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    pub fn shared_variables(&self) -> Arc<[String]> {
        self.vars.clone()
    }

    pub fn is_zero(&self) -> bool {
        self.node.is_zero()
    }

    pub fn contains_abs(&self) -> bool {
        self.node.contains_abs()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.node.write(&self.vars, f)
    }
}

/// Builds the shared variable list `x1..xm`.
pub fn coordinate_variables(dim: usize) -> Arc<[String]> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

/// The single-parameter variable list `[t]`.
pub fn curve_variables() -> Arc<[String]> {
    Arc::from(vec!["t".to_string()])
}
