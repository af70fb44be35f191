//! Tokenizer shared by the tab-separated ontology and schema files.

/// One tab-separated field. `value_quoted` records whether the value part
/// (the whole field, or the part after `key=`) was double-quoted.
#[derive(Debug, PartialEq)]
pub(crate) struct Field {
    pub key: Option<String>,
    pub value: String,
    pub value_quoted: bool,
}

/// Splits a line into tab-separated fields. A double quote at the start of a
/// field, or directly after its first `=`, opens a quoted value that may
/// contain tabs; `""` inside it is a literal quote. Values are trimmed.
pub(crate) fn split_fields(line: &str) -> Result<Vec<Field>, String> {
    let mut fields = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        let mut key = None;
        let mut buf = String::new();
        let mut quoted = false;
        loop {
            match chars.peek().copied() {
                None | Some('\t') => break,
                Some('"') if buf.trim().is_empty() => {
                    chars.next();
                    buf.clear();
                    read_quoted(&mut chars, &mut buf)?;
                    quoted = true;
                    while let Some(&c) = chars.peek() {
                        match c {
                            '\t' => break,
                            c if c.is_whitespace() => {
                                chars.next();
                            }
                            _ => return Err("text after closing quote".into()),
                        }
                    }
                    break;
                }
                Some('=') if key.is_none() => {
                    chars.next();
                    key = Some(std::mem::take(&mut buf).trim().to_string());
                }
                Some(c) => {
                    chars.next();
                    buf.push(c);
                }
            }
        }
        fields.push(Field {
            key,
            value: buf.trim().to_string(),
            value_quoted: quoted,
        });
        if chars.next().is_none() {
            break;
        }
    }
    Ok(fields)
}

fn read_quoted(
    chars: &mut std::iter::Peekable<std::str::Chars<'_>>,
    buf: &mut String,
) -> Result<(), String> {
    loop {
        match chars.next() {
            None => return Err("unterminated quote".into()),
            Some('"') => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    buf.push('"');
                } else {
                    return Ok(());
                }
            }
            Some(c) => buf.push(c),
        }
    }
}

/// Quotes `s` when it would not survive [`split_fields`] verbatim.
/// `force` quotes unconditionally (used for reserved words).
pub(crate) fn quote_if_needed(s: &str, force: bool) -> String {
    let needs = force || s.contains(['\t', '"', '\r', '\n', '=']) || s.trim() != s;
    if needs {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_keys_and_quotes() {
        let f = split_fields("concept\t \"a\tb\" \tcolumn=\"x\"\"y\"\tparent=P Q").unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!(f[1].value, "a\tb");
        assert!(f[1].value_quoted && f[1].key.is_none());
        assert_eq!(f[2].key.as_deref(), Some("column"));
        assert_eq!(f[2].value, "x\"y");
        assert_eq!(f[3].value, "P Q");
        assert!(!f[3].value_quoted);
    }

    #[test]
    fn rejects_trailing_garbage_and_open_quotes() {
        assert!(split_fields("\"a\"b").is_err());
        assert!(split_fields("\"abc").is_err());
    }
}
