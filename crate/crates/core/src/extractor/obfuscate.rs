//! Comment stripping and identifier renaming over the token stream.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::lexer::{tokenize_c, LexError, Token, TokenKind};

const DEFAULT_ALLOWLIST: &str = include_str!("../../assets/allowlist.txt");

/// C++ keywords that C11 does not reserve. Never renamed.
const CPP_KEYWORDS: &[&str] = &[
    "alignas", "alignof", "and", "and_eq", "asm", "bitand", "bitor", "bool", "catch", "char8_t",
    "char16_t", "char32_t", "class", "co_await", "co_return", "co_yield", "compl", "concept",
    "const_cast", "consteval", "constexpr", "constinit", "decltype", "delete", "dynamic_cast",
    "explicit", "export", "false", "final", "friend", "mutable", "namespace", "new", "noexcept", "not",
    "not_eq", "nullptr", "operator", "or", "or_eq", "override", "private", "protected", "public",
    "reinterpret_cast", "requires", "static_assert", "static_cast", "template", "this",
    "thread_local", "throw", "true", "try", "typeid", "typename", "using", "virtual", "wchar_t", "xor",
    "xor_eq",
];

/// Identifiers exempt from renaming, typically library names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Allowlist(HashSet<String>);

impl Allowlist {
    /// Parses whitespace-separated names; `#` starts a comment.
    pub fn parse(text: &str) -> Allowlist {
        Allowlist(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or_default())
                .flat_map(str::split_whitespace)
                .map(str::to_string)
                .collect(),
        )
    }

    /// The shipped list of C/C++ library and Juliet helper identifiers.
    pub fn builtin() -> Allowlist {
        Allowlist::parse(DEFAULT_ALLOWLIST)
    }

    pub fn from_file(path: &Path) -> std::io::Result<Allowlist> {
        Ok(Allowlist::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains(name)
    }

    pub fn insert(&mut self, name: impl Into<String>) {
        self.0.insert(name.into());
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromIterator<String> for Allowlist {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Allowlist(iter.into_iter().collect())
    }
}

/// Ordered original → replacement pairs, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenameMap {
    pub pairs: Vec<(String, String)>,
}

impl RenameMap {
    pub fn get(&self, original: &str) -> Option<&str> {
        self.pairs.iter().find(|(o, _)| o == original).map(|(_, r)| r.as_str())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Replaces every comment with at most one space.
///
/// A space is emitted only when the comment sits between two non-whitespace
/// characters, so token separation is kept without doubling existing
/// whitespace. The newline after a line comment is not part of the comment
/// and survives.
pub fn strip_comments(source: &str) -> Result<String, LexError> {
    let tokens = tokenize_c(source)?;
    let mut out = String::with_capacity(source.len());
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind != TokenKind::Comment {
            out.push_str(tok.text);
            continue;
        }
        let before = out.chars().next_back();
        let after = tokens[i + 1..]
            .iter()
            .find(|t| t.kind != TokenKind::Comment)
            .and_then(|t| t.text.chars().next());
        let needs_gap = matches!((before, after), (Some(b), Some(a)) if !b.is_whitespace() && !a.is_whitespace());
        if needs_gap {
            out.push(' ');
        }
    }
    Ok(out)
}

fn define_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^#\s*define\s+([A-Za-z_][A-Za-z0-9_]*)").unwrap())
}

fn include_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^#\s*include\b").unwrap())
}

/// Whether `name` carries one of the hint words, ignoring case.
pub fn has_hint(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    lower.contains("good") || lower.contains("bad")
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap())
}

fn next_significant<'a>(tokens: &'a [Token<'a>], from: usize) -> Option<&'a Token<'a>> {
    tokens[from..]
        .iter()
        .find(|t| !matches!(t.kind, TokenKind::Whitespace | TokenKind::Comment))
}

fn prev_significant<'a>(tokens: &'a [Token<'a>], before: usize) -> Option<(usize, &'a Token<'a>)> {
    tokens[..before]
        .iter()
        .enumerate()
        .rev()
        .find(|(_, t)| !matches!(t.kind, TokenKind::Whitespace | TokenKind::Comment))
}

/// Renames user identifiers to neutral names.
///
/// Identifiers that are ever directly followed by `(` become `f1`, `f2`, ...;
/// all others become `v1`, `v2`, ...; both numbered by first occurrence.
/// Exempt from renaming: C and C++ keywords, `main`, `std`, names in
/// `allowlist`, names appearing in a preprocessor directive other than
/// `#include`, and names qualified with `std::`. The last three exemptions
/// do not apply to names containing "good" or "bad"; such names are renamed
/// inside `#define` and `#if` lines as well.
/// Other preprocessor text, literals and comments pass through unchanged.
pub fn obfuscate_identifiers(source: &str, allowlist: &Allowlist) -> Result<(String, RenameMap), LexError> {
    let tokens = tokenize_c(source)?;

    // Names that keep their spelling; replacements must avoid all of them.
    let mut surviving: HashSet<&str> = HashSet::new();
    let mut macros: HashSet<&str> = HashSet::new();
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Preprocessor) {
        if let Some(c) = define_re().captures(tok.text) {
            macros.insert(c.get(1).unwrap().as_str());
        }
        let include = include_re().is_match(tok.text);
        for word in word_re().find_iter(tok.text).map(|m| m.as_str()) {
            // words in directives other than #include are treated like macros
            if !include {
                macros.insert(word);
            }
            if include || !has_hint(word) {
                surviving.insert(word);
            }
        }
    }
    let mut std_qualified: HashSet<&str> = HashSet::new();
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind != TokenKind::Identifier {
            continue;
        }
        if let Some((j, p)) = prev_significant(&tokens, i) {
            if p.text == "::" && prev_significant(&tokens, j).is_some_and(|(_, q)| q.text == "std") {
                std_qualified.insert(tok.text);
            }
        }
    }

    let exempt = |name: &str| {
        name == "main"
            || CPP_KEYWORDS.contains(&name)
            || allowlist.contains(name)
            || (!has_hint(name) && (name == "std" || macros.contains(name) || std_qualified.contains(name)))
    };

    let mut functions: HashSet<&str> = HashSet::new();
    let mut order: Vec<&str> = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for (i, tok) in tokens.iter().enumerate() {
        if tok.kind != TokenKind::Identifier {
            continue;
        }
        if exempt(tok.text) {
            surviving.insert(tok.text);
            continue;
        }
        if next_significant(&tokens, i + 1).is_some_and(|n| n.kind == TokenKind::Punct && n.text == "(") {
            functions.insert(tok.text);
        }
        if seen.insert(tok.text) {
            order.push(tok.text);
        }
    }

    let mut map: HashMap<&str, String> = HashMap::new();
    let mut pairs = Vec::with_capacity(order.len());
    let (mut next_f, mut next_v) = (1usize, 1usize);
    for name in order {
        let (prefix, counter) = if functions.contains(name) {
            ("f", &mut next_f)
        } else {
            ("v", &mut next_v)
        };
        let replacement = loop {
            let candidate = format!("{prefix}{counter}");
            *counter += 1;
            if !surviving.contains(candidate.as_str()) {
                break candidate;
            }
        };
        pairs.push((name.to_string(), replacement.clone()));
        map.insert(name, replacement);
    }

    let mut out = String::with_capacity(source.len());
    for tok in &tokens {
        match (tok.kind, map.get(tok.text)) {
            (TokenKind::Identifier, Some(r)) => out.push_str(r),
            (TokenKind::Preprocessor, _) if !include_re().is_match(tok.text) => {
                // hinted macro names are renamed in their definitions too
                let rewritten = word_re().replace_all(tok.text, |c: &regex::Captures| {
                    let word = c.get(0).unwrap().as_str();
                    match map.get(word) {
                        Some(r) if has_hint(word) => r.clone(),
                        _ => word.to_string(),
                    }
                });
                out.push_str(&rewritten);
            }
            _ => out.push_str(tok.text),
        }
    }
    Ok((out, RenameMap { pairs }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_allow() -> Allowlist {
        Allowlist::builtin()
    }

    #[test]
    fn renames_functions_and_variables() {
        let (out, map) = obfuscate_identifiers("void goodG2B() { int goodData; goodData = 1; }", &std_allow()).unwrap();
        assert_eq!(out, "void f1() { int v1; v1 = 1; }");
        assert_eq!(map.get("goodG2B"), Some("f1"));
        assert_eq!(map.get("goodData"), Some("v1"));
    }

    #[test]
    fn allowlisted_calls_survive() {
        let (out, _) = obfuscate_identifiers("strcpy(data, source)", &std_allow()).unwrap();
        assert_eq!(out, "strcpy(v1, v2)");
    }

    #[test]
    fn main_is_exempt() {
        let (out, _) = obfuscate_identifiers("int main(int argc, char* argv[])", &std_allow()).unwrap();
        assert_eq!(out, "int main(int v1, char* v2[])");
    }

    #[test]
    fn literals_and_directives_untouched() {
        let src = "#include \"bad.h\"\nchar *badName = \"bad\"; char c = 'b';";
        let (out, _) = obfuscate_identifiers(src, &Allowlist::default()).unwrap();
        assert_eq!(out, "#include \"bad.h\"\nchar *v1 = \"bad\"; char v2 = 'b';");
    }

    #[test]
    fn macros_keep_their_names() {
        let src = "#define SIZE 10\nchar buf[SIZE];";
        let (out, _) = obfuscate_identifiers(src, &Allowlist::default()).unwrap();
        assert_eq!(out, "#define SIZE 10\nchar v1[SIZE];");
    }

    #[test]
    fn replacements_skip_surviving_names() {
        // `v1` is a macro here, so the first variable must not become v1
        let src = "#define v1 3\nint x = v1;";
        let (out, map) = obfuscate_identifiers(src, &Allowlist::default()).unwrap();
        assert_eq!(out, "#define v1 3\nint v2 = v1;");
        assert_eq!(map.pairs, vec![("x".to_string(), "v2".to_string())]);
    }

    #[test]
    fn call_anywhere_marks_a_function() {
        let src = "int helper; void g() { helper(); }";
        let (out, _) = obfuscate_identifiers(src, &Allowlist::default()).unwrap();
        assert_eq!(out, "int f1; void f2() { f1(); }");
    }

    #[test]
    fn comment_between_name_and_paren() {
        let (out, _) = obfuscate_identifiers("foo /* c */ (1);", &Allowlist::default()).unwrap();
        assert_eq!(out, "f1 /* c */ (1);");
    }

    #[test]
    fn cpp_keywords_and_std_names_survive() {
        let src = "using namespace std;\nclass Box { public: virtual void run(); };\nstd::unique_ptr<Box> p;";
        let (out, _) = obfuscate_identifiers(src, &Allowlist::default()).unwrap();
        assert!(out.contains("using namespace std;"));
        assert!(out.contains("class v1 { public: virtual void f1(); };"));
        assert!(out.contains("std::unique_ptr<v1> v2;"));
    }

    #[test]
    fn idempotent_on_simple_input() {
        let src = "void goodG2B() { int goodData; goodData = 1; helper(goodData); }";
        let (once, _) = obfuscate_identifiers(src, &std_allow()).unwrap();
        let (twice, map) = obfuscate_identifiers(&once, &std_allow()).unwrap();
        assert_eq!(once, twice);
        assert!(map.pairs.iter().all(|(a, b)| a == b));
    }

    #[test]
    fn hinted_macros_renamed_with_their_definition() {
        let src = "#include <bad.h>\n#define BAD_SIZE 10\n#define LIMIT 4\n#ifdef BAD_SIZE\nint goodBuf[BAD_SIZE + LIMIT];\n#endif\n";
        let (out, _) = obfuscate_identifiers(src, &Allowlist::default()).unwrap();
        assert_eq!(
            out,
            "#include <bad.h>\n#define v2 10\n#define LIMIT 4\n#ifdef v2\nint v1[v2 + LIMIT];\n#endif\n"
        );
    }

    #[test]
    fn hinted_std_names_are_renamed() {
        let (out, _) = obfuscate_identifiers("catch (std::bad_alloc &e) {}", &Allowlist::default()).unwrap();
        assert_eq!(out, "catch (std::v1 &v2) {}");
    }

    #[test]
    fn names_in_conditionals_stay_consistent() {
        let (once, _) = obfuscate_identifiers("#if GOOD_VALUE\nint GOOD_VALUE;\n#endif\n", &std_allow()).unwrap();
        assert_eq!(once, "#if v1\nint v1;\n#endif\n");
        let (twice, map) = obfuscate_identifiers(&once, &std_allow()).unwrap();
        assert_eq!(twice, once);
        assert!(map.is_empty());
    }

    #[test]
    fn hint_detection() {
        assert!(has_hint("goodG2B") && has_hint("OMITBAD") && has_hint("badSink"));
        assert!(!has_hint("data") && !has_hint("Go_od"));
    }

    #[test]
    fn builtin_allowlist_has_no_hint_words() {
        let list = Allowlist::builtin();
        assert!(list.contains("strcpy") && list.contains("cout") && list.contains("printLine"));
        assert!(list.0.iter().all(|n| !has_hint(n)));
    }

    #[test]
    fn strip_leading_block_comment() {
        assert_eq!(strip_comments("/* FLAW: divide by zero */ int x;").unwrap(), " int x;");
    }

    #[test]
    fn strip_trailing_line_comment() {
        assert_eq!(strip_comments("int y; // fine\n").unwrap(), "int y; \n");
    }

    #[test]
    fn strip_keeps_strings_with_slashes() {
        let src = "char *u = \"http://x\";\n";
        assert_eq!(strip_comments(src).unwrap(), src);
    }

    #[test]
    fn strip_separates_adjacent_tokens() {
        assert_eq!(strip_comments("int/**/x;").unwrap(), "int x;");
        assert_eq!(strip_comments("a/*1*//*2*/b").unwrap(), "a b");
    }

    #[test]
    fn strip_propagates_lex_errors() {
        assert!(strip_comments("int x; /* open").is_err());
        assert!(obfuscate_identifiers("\"open", &Allowlist::default()).is_err());
    }
}
