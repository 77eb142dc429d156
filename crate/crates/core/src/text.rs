//! Small text helpers shared by the prompt builders and response parsers.

/// Collapses every whitespace run (including newlines) to a single space and
/// trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Returns the body of the first fenced code block (```` ``` ```` or `~~~`)
/// in `text`, without the fence lines or the info string.
///
/// An unterminated fence runs to the end of the text.
pub fn first_fenced_block(text: &str) -> Option<String> {
    let mut lines = text.split_inclusive('\n');
    let (fence_char, fence_len) = loop {
        let line = lines.next()?;
        let trimmed = line.trim_start();
        if let Some((c, n)) = fence_opener(trimmed) {
            break (c, n);
        }
    };
    let mut body = String::new();
    for line in lines {
        let trimmed = line.trim();
        let run = trimmed.chars().take_while(|&c| c == fence_char).count();
        if run >= fence_len && trimmed.len() == run {
            return Some(strip_one_trailing_newline(body));
        }
        body.push_str(line);
    }
    Some(strip_one_trailing_newline(body))
}

fn fence_opener(line: &str) -> Option<(char, usize)> {
    let c = line.chars().next()?;
    if c != '`' && c != '~' {
        return None;
    }
    let n = line.chars().take_while(|&x| x == c).count();
    (n >= 3).then_some((c, n))
}

fn strip_one_trailing_newline(mut s: String) -> String {
    if s.ends_with('\n') {
        s.pop();
        if s.ends_with('\r') {
            s.pop();
        }
    }
    s
}

/// Wraps `code` in a backtick fence longer than any backtick run inside it.
pub fn fence(code: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in code.chars() {
        if c == '`' {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    let ticks = "`".repeat(longest.max(2) + 1);
    let nl = if code.ends_with('\n') { "" } else { "\n" };
    format!("{ticks}\n{code}{nl}{ticks}")
}
