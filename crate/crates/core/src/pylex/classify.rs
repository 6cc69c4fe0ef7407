use super::{BuiltinTables, ComponentClass, Token};

fn is_ident(t: &Token) -> bool {
    t.component.is_identifier()
}

fn is_symbol(t: &Token, s: &str) -> bool {
    t.component == ComponentClass::Symbol && t.text == s
}

/// Fuses `recv.member.member` chains of adjacent tokens into one composite.
fn fuse_composites(tokens: &[Token]) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let mut tok = tokens[i].clone();
        if is_ident(&tok) {
            while i + 2 < tokens.len() && is_symbol(&tokens[i + 1], ".") && is_ident(&tokens[i + 2]) {
                tok.text.push('.');
                tok.text.push_str(&tokens[i + 2].text);
                tok.span.1 = tokens[i + 2].span.1;
                i += 2;
            }
        }
        out.push(tok);
        i += 1;
    }
    out
}

fn prev_significant(tokens: &[Token], i: usize) -> Option<&Token> {
    tokens[..i]
        .iter()
        .rev()
        .find(|t| t.component != ComponentClass::Whitespace)
}

fn next_significant(tokens: &[Token], i: usize) -> Option<&Token> {
    tokens[i + 1..]
        .iter()
        .find(|t| t.component != ComponentClass::Whitespace)
}

/// Member name of a composite: the text after the last dot.
pub fn member_name(text: &str) -> &str {
    text.rsplit('.').next().unwrap_or(text)
}

/// Assigns final component classes to identifier tokens.
///
/// Rules, first match wins: name after `def` is a `Method`, after `class` a
/// `Class`; dotted composites (or a name right after a detached `.`) are
/// method calls when followed by `(` and attribute calls otherwise, built-in
/// when the member name is in the matching table; bare names are
/// `BuiltinClass`, `BuiltinMethod` (only when called), `BuiltinAttribute`,
/// or `Variable`. Non-identifier tokens pass through unchanged.
pub fn classify(tokens: &[Token], builtins: &BuiltinTables) -> Vec<Token> {
    let fused = fuse_composites(tokens);
    let mut out = fused.clone();
    for (i, tok) in fused.iter().enumerate() {
        if !is_ident(tok) {
            continue;
        }
        let prev = prev_significant(&fused, i);
        let called = next_significant(&fused, i).is_some_and(|t| is_symbol(t, "("));
        let after_kw = |kw: &str| {
            prev.is_some_and(|p| p.component == ComponentClass::Keyword && p.text == kw)
        };
        let member_access = tok.text.contains('.') || prev.is_some_and(|p| is_symbol(p, "."));

        let component = if after_kw("def") {
            ComponentClass::Method
        } else if after_kw("class") {
            ComponentClass::Class
        } else if member_access {
            let member = member_name(&tok.text);
            match (called, builtins.builtin_methods.contains(member), builtins.builtin_attr_calls.contains(member)) {
                (true, true, _) => ComponentClass::BuiltinMethCall,
                (true, false, _) => ComponentClass::MethodCall,
                (false, _, true) => ComponentClass::BuiltinAttrCall,
                (false, _, false) => ComponentClass::AttributeCall,
            }
        } else if builtins.builtin_classes.contains(&tok.text) {
            ComponentClass::BuiltinClass
        } else if called && builtins.builtin_functions.contains(&tok.text) {
            ComponentClass::BuiltinMethod
        } else if builtins.builtin_attributes.contains(&tok.text) {
            ComponentClass::BuiltinAttribute
        } else {
            ComponentClass::Variable
        };
        out[i].component = component;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pylex::{clean_code, join_tokens, lex};
    use ComponentClass::*;

    fn run(src: &str) -> Vec<(ComponentClass, String)> {
        classify(&lex(src).unwrap(), BuiltinTables::shipped())
            .into_iter()
            .map(|t| (t.component, t.text))
            .collect()
    }

    fn t(c: ComponentClass, s: &str) -> (ComponentClass, String) {
        (c, s.to_string())
    }

    #[test]
    fn attribute_composite_is_fused() {
        assert_eq!(
            run("y = address.strip"),
            vec![
                t(Variable, "y"),
                t(Whitespace, " "),
                t(Operator, "="),
                t(Whitespace, " "),
                t(AttributeCall, "address.strip"),
            ]
        );
    }

    #[test]
    fn called_builtin_member_is_builtin_method_call() {
        assert_eq!(
            run("address.strip()"),
            vec![t(BuiltinMethCall, "address.strip"), t(Symbol, "("), t(Symbol, ")")]
        );
        assert_eq!(run("obj.frobnicate()")[0], t(MethodCall, "obj.frobnicate"));
        assert_eq!(run("os.path.join(a)")[0], t(BuiltinMethCall, "os.path.join"));
        assert_eq!(run("x.real")[0], t(BuiltinAttrCall, "x.real"));
    }

    #[test]
    fn builtin_function_call() {
        assert_eq!(
            run("print(x)"),
            vec![t(BuiltinMethod, "print"), t(Symbol, "("), t(Variable, "x"), t(Symbol, ")")]
        );
        // not called: plain variable
        assert_eq!(run("key=len")[2], t(Variable, "len"));
    }

    #[test]
    fn class_and_def_names() {
        assert_eq!(
            run("class Foo:"),
            vec![t(Keyword, "class"), t(Whitespace, " "), t(Class, "Foo"), t(Symbol, ":")]
        );
        assert_eq!(run("def __init__(self):")[2], t(Method, "__init__"));
    }

    #[test]
    fn builtin_classes_and_attributes() {
        assert_eq!(run("int(x)")[0], t(BuiltinClass, "int"));
        assert_eq!(run("dict")[0], t(BuiltinClass, "dict"));
        assert_eq!(run("__name__")[0], t(BuiltinAttribute, "__name__"));
    }

    #[test]
    fn self_qualified_names_are_composites() {
        assert_eq!(run("self.count")[0], t(AttributeCall, "self.count"));
        assert_eq!(run("self.run_all()")[0], t(MethodCall, "self.run_all"));
    }

    #[test]
    fn detached_member_after_expression() {
        let toks = run("STR.join(parts)");
        assert_eq!(toks[0], t(Placeholder, "STR"));
        assert_eq!(toks[1], t(Symbol, "."));
        assert_eq!(toks[2], t(BuiltinMethCall, "join"));
    }

    #[test]
    fn classify_is_idempotent_and_lossless() {
        let src = clean_code("class A(B):\n    def go(self, n):\n        return [self.k.strip() for k in n if isinstance(k, str)]\n");
        let once = classify(&lex(&src).unwrap(), BuiltinTables::shipped());
        let twice = classify(&once, BuiltinTables::shipped());
        assert_eq!(once, twice);
        assert_eq!(join_tokens(&once), src);
    }
}
