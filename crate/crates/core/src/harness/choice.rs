/// Maps a generated answer onto one of `options`.
///
/// A leading option letter wins (`B`, `b.`, `C)`, `(C) …`); otherwise the
/// longest option text found inside the generation, case-insensitively.
pub fn match_choice(generated: &str, options: &[String]) -> Option<usize> {
    if options.is_empty() {
        return None;
    }
    let text = generated.trim();
    if let Some(idx) = leading_letter(text).filter(|i| *i < options.len()) {
        return Some(idx);
    }
    let lowered = text.to_lowercase();
    options
        .iter()
        .enumerate()
        .filter(|(_, opt)| !opt.trim().is_empty() && lowered.contains(&opt.trim().to_lowercase()))
        .max_by(|a, b| a.1.trim().len().cmp(&b.1.trim().len()).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
}

fn leading_letter(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let (letter, rest) = match bytes {
        [b'(', l, b')', rest @ ..] => (*l, rest),
        [l, rest @ ..] => (*l, rest),
        [] => return None,
    };
    if !letter.is_ascii_alphabetic() {
        return None;
    }
    let bracketed = bytes[0] == b'(';
    let terminated = bracketed
        || matches!(rest.first(), None | Some(b'.') | Some(b')') | Some(b':') | Some(b','));
    terminated.then(|| (letter.to_ascii_uppercase() - b'A') as usize)
}
