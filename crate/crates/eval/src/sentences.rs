//! Rule-based sentence segmentation.
//!
//! A sentence ends at a run of `.`, `!`, `?` or `…` (plus any closing quotes
//! or brackets) that is followed by whitespace or the end of the line. Line
//! breaks always end a sentence, which keeps bullet items apart. A period does
//! not end a sentence after a known abbreviation or after a list number at
//! the start of a line.

const TERMINALS: &[char] = &['.', '!', '?', '…'];
const CLOSERS: &[char] = &['"', '\'', ')', ']', '”', '’', '*', '_'];

const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "st.", "sr.", "jr.", "vs.", "e.g.", "i.e.", "approx.", "a.m.", "p.m.",
    "no.", "min.", "hr.", "hrs.", "mins.",
];

/// Splits `text` into trimmed, non-empty sentences, in order.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for line in text.split('\n') {
        split_line(line, &mut out);
    }
    out
}

fn split_line<'a>(line: &'a str, out: &mut Vec<&'a str>) {
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !TERMINALS.contains(&c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && (TERMINALS.contains(&chars[j].1) || CLOSERS.contains(&chars[j].1)) {
            j += 1;
        }
        let end = chars.get(j).map_or(line.len(), |&(p, _)| p);
        let at_break = j == chars.len() || chars[j].1.is_whitespace();
        if at_break && !(c == '.' && j == i + 1 && guarded(&line[start..pos + 1], start == 0)) {
            push(&line[start..end], out);
            start = end;
        }
        i = j;
    }
    push(&line[start..], out);
}

/// True when the period closing `head` belongs to an abbreviation or a list
/// marker rather than ending a sentence.
fn guarded(head: &str, line_start: bool) -> bool {
    let word = head.split_whitespace().last().unwrap_or("");
    let lower = word.to_lowercase();
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    let digits = &word[..word.len() - 1];
    line_start
        && head.split_whitespace().count() == 1
        && !digits.is_empty()
        && digits.len() <= 2
        && digits.chars().all(|c| c.is_ascii_digit())
}

fn push<'a>(piece: &'a str, out: &mut Vec<&'a str>) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece);
    }
}
