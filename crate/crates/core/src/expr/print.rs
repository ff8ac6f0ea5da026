use super::Node;

// Binding strength; a child is parenthesized when it binds more loosely than
// its context requires.
fn level(n: &Node) -> u8 {
    match n {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Const(c) if c.is_sign_negative() => 3,
        Node::Pow(..) => 4,
        _ => 5,
    }
}

fn number(c: f64) -> String {
    if c.is_sign_negative() {
        format!("-{}", -c)
    } else {
        format!("{c}")
    }
}

fn wrapped(n: &Node, parens: bool) -> String {
    if parens {
        format!("({})", render(n))
    } else {
        render(n)
    }
}

fn call(name: &str, args: &[Node]) -> String {
    let inner: Vec<String> = args.iter().map(render).collect();
    format!("{name}({})", inner.join(", "))
}

/// Renders a tree so that parsing the text yields the same tree.
pub(super) fn render(n: &Node) -> String {
    match n {
        Node::Const(c) => number(*c),
        Node::Var(i) => format!("x{}", i + 1),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            let (op, lvl) = match n {
                Node::Add(..) => ("+", 1),
                Node::Sub(..) => ("-", 1),
                Node::Mul(..) => ("*", 2),
                _ => ("/", 2),
            };
            format!("{} {op} {}", wrapped(a, level(a) < lvl), wrapped(b, level(b) <= lvl))
        }
        Node::Neg(a) => {
            // `-2` would read back as a negative literal, so plain
            // non-negative constants keep explicit parentheses.
            let literal = matches!(**a, Node::Const(c) if !c.is_sign_negative());
            format!("-{}", wrapped(a, literal || level(a) < 3))
        }
        Node::Pow(a, k) => format!("{}^{k}", wrapped(a, level(a) < 5)),
        Node::Abs(a) => call("abs", std::slice::from_ref(a)),
        Node::Sqrt(a) => call("sqrt", std::slice::from_ref(a)),
        Node::Sign(a) => call("sign", std::slice::from_ref(a)),
        Node::Norm(args) => call("norm", args),
        Node::SqNorm(args) => call("sq", args),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_expr;

    fn round_trip(text: &str) {
        let e = parse_expr(text, 3).unwrap();
        let printed = e.to_string();
        let again = parse_expr(&printed, 3).unwrap();
        assert_eq!(e, again, "{text} -> {printed}");
    }

    #[test]
    fn corpus_round_trips() {
        for text in [
            "1.7175 - abs(x1 - 0.2805)",
            "1.429 - norm(x1 - 0.307, x2 - 0.044)",
            "x1 - (x2 - x3)",
            "x1 / (x2 * x3)",
            "x1 / x2 * x3",
            "-(x1 + x2)",
            "-x1 * -x2",
            "--x1",
            "-(2)",
            "-2 * x1",
            "x1 - -2",
            "-2^2",
            "(-2)^2",
            "(x1^2)^3",
            "x1^-2",
            "sq(x1, x2 + 1, 3)",
            "sqrt(abs(x1)) + sign(x2)",
            "1e-20 + 1e21 + 0.1",
            "-(x1^2)",
            "-(-2)",
        ] {
            round_trip(text);
        }
    }

    #[test]
    fn printed_form_is_readable() {
        let e = parse_expr("1.7175 - abs(x1 - 0.2805)", 2).unwrap();
        assert_eq!(e.to_string(), "1.7175 - abs(x1 - 0.2805)");
        let e = parse_expr("(x1 + x2) * x3", 3).unwrap();
        assert_eq!(e.to_string(), "(x1 + x2) * x3");
    }
}
