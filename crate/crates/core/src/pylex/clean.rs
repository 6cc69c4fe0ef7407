use super::lexer::{is_ident_continue, is_ident_start, scan_string, StringScan};
use super::STR_PLACEHOLDER;

/// Replaces string literals with the `STR` placeholder and drops comments.
///
/// Line breaks are kept (a comment-only line becomes an empty line) and
/// whitespace directly before a comment is removed with it. `\r\n` and
/// lone `\r` become `\n`; form feeds become spaces. Unterminated strings
/// are replaced up to the end of their line.
pub fn clean_code(src: &str) -> String {
    let src = src.replace("\r\n", "\n").replace(['\r'], "\n").replace('\x0c', " ");
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        if c == '#' {
            let trimmed = out.trim_end_matches([' ', '\t']).len();
            out.truncate(trimmed);
            i = src[i..].find('\n').map_or(src.len(), |off| i + off);
            continue;
        }
        if c == '"' || c == '\'' || is_ident_start(c) {
            match scan_string(&src, i) {
                StringScan::Literal { end } | StringScan::Unterminated { end } => {
                    out.push_str(STR_PLACEHOLDER);
                    i = end;
                    continue;
                }
                StringScan::NotString => {}
            }
        }
        if is_ident_start(c) {
            let mut j = i;
            for (off, ch) in src[i..].char_indices() {
                if !is_ident_continue(ch) {
                    break;
                }
                j = i + off + ch.len_utf8();
            }
            out.push_str(&src[i..j]);
            i = j;
            continue;
        }
        out.push(c);
        i += c.len_utf8();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messy_print_argument() {
        assert_eq!(clean_code("print(\"a#$%~!\")"), "print(STR)");
    }

    #[test]
    fn nothing_to_clean() {
        assert_eq!(clean_code("x = 1"), "x = 1");
    }

    #[test]
    fn string_and_trailing_comment() {
        assert_eq!(clean_code("s = \"hello\"  # greet"), "s = STR");
    }

    #[test]
    fn comment_lines_keep_their_line_break() {
        assert_eq!(clean_code("# head\nx = 1\n    # inner\ny"), "\nx = 1\n\ny");
    }

    #[test]
    fn hash_inside_string_is_not_a_comment() {
        assert_eq!(clean_code("a = '#not' + b  # yes"), "a = STR + b");
    }

    #[test]
    fn prefixed_and_triple_quoted() {
        assert_eq!(
            clean_code("def f():\n    \"\"\"Doc\n    more\"\"\"\n    return rb'\\x00'"),
            "def f():\n    STR\n    return STR"
        );
    }

    #[test]
    fn identifiers_ending_in_prefix_letters_are_not_strings() {
        assert_eq!(clean_code("bar = fr"), "bar = fr");
        assert_eq!(clean_code("x = lib'a'"), "x = libSTR");
    }

    #[test]
    fn unterminated_string_is_replaced_to_end_of_line() {
        assert_eq!(clean_code("x = 'abc\ny = 2"), "x = STR\ny = 2");
    }

    #[test]
    fn carriage_returns_normalized() {
        assert_eq!(clean_code("a\r\nb\rc"), "a\nb\nc");
    }
}
