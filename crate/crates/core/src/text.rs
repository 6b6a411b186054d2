//! Script detection, length measures, and tokenization shared by the
//! corpus statistics and the utility metrics.

/// Ideographs, kana and hangul. Used for script detection.
pub fn is_cjk_letter(c: char) -> bool {
    matches!(c as u32,
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2EBEF
        | 0x3040..=0x309F
        | 0x30A0..=0x30FF
        | 0x1100..=0x11FF
        | 0xAC00..=0xD7AF)
}

/// Any character that is tokenized on its own: CJK letters plus CJK
/// symbols/punctuation and the full-width forms block.
pub fn is_cjk_char(c: char) -> bool {
    is_cjk_letter(c) || matches!(c as u32, 0x3000..=0x303F | 0xFF00..=0xFFEF)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Script {
    Cjk,
    Latin,
}

/// Majority vote between CJK letters and all other alphabetic characters.
pub fn detect_script(text: &str) -> Script {
    let (mut cjk, mut other) = (0usize, 0usize);
    for c in text.chars() {
        if is_cjk_letter(c) {
            cjk += 1;
        } else if c.is_alphabetic() {
            other += 1;
        }
    }
    if cjk > 0 && cjk >= other {
        Script::Cjk
    } else {
        Script::Latin
    }
}

/// Length in characters for CJK-dominant text, in whitespace-delimited
/// words otherwise. Whitespace is not counted as a character.
pub fn text_length(text: &str) -> usize {
    match detect_script(text) {
        Script::Cjk => text.chars().filter(|c| !c.is_whitespace()).count(),
        Script::Latin => text.split_whitespace().count(),
    }
}

/// BLEU tokenization: every CJK character is its own token, ASCII
/// punctuation is split off, everything else is whitespace-delimited.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
        } else if is_cjk_char(c) || c.is_ascii_punctuation() {
            if !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            tokens.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}
