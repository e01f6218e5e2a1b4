//! Inflected forms of keyword verbs and nouns, so "kill" also matches "killed".

const IRREGULAR: &[(&str, &[&str])] = &[
    ("arrest", &["arrested"]),
    ("be", &["is", "are", "was", "were", "been", "being"]),
    ("bear", &["bore", "born", "borne"]),
    ("beat", &["beaten"]),
    ("begin", &["began", "begun"]),
    ("blow", &["blew", "blown"]),
    ("break", &["broke", "broken"]),
    ("bring", &["brought"]),
    ("build", &["built"]),
    ("buy", &["bought"]),
    ("catch", &["caught"]),
    ("choose", &["chose", "chosen"]),
    ("die", &["died", "dies", "dying"]),
    ("do", &["did", "done", "does"]),
    ("drive", &["drove", "driven"]),
    ("fall", &["fell", "fallen"]),
    ("feel", &["felt"]),
    ("fight", &["fought"]),
    ("find", &["found"]),
    ("flee", &["fled"]),
    ("fly", &["flew", "flown", "flies"]),
    ("forgive", &["forgave", "forgiven"]),
    ("get", &["got", "gotten"]),
    ("give", &["gave", "given"]),
    ("go", &["went", "gone", "goes"]),
    ("hang", &["hung", "hanged"]),
    ("have", &["has", "had"]),
    ("hear", &["heard"]),
    ("hide", &["hid", "hidden"]),
    ("hit", &["hit"]),
    ("hold", &["held"]),
    ("hurt", &["hurt"]),
    ("keep", &["kept"]),
    ("lay", &["laid"]),
    ("lead", &["led"]),
    ("leave", &["left"]),
    ("lend", &["lent"]),
    ("lie", &["lay", "lain", "lied", "lying"]),
    ("lose", &["lost"]),
    ("make", &["made"]),
    ("meet", &["met"]),
    ("pay", &["paid"]),
    ("put", &["put"]),
    ("quit", &["quit"]),
    ("ride", &["rode", "ridden"]),
    ("rise", &["rose", "risen"]),
    ("run", &["ran"]),
    ("say", &["said"]),
    ("see", &["saw", "seen"]),
    ("seek", &["sought"]),
    ("sell", &["sold"]),
    ("send", &["sent"]),
    ("set", &["set"]),
    ("shoot", &["shot"]),
    ("shut", &["shut"]),
    ("sink", &["sank", "sunk"]),
    ("slay", &["slew", "slain"]),
    ("speak", &["spoke", "spoken"]),
    ("spend", &["spent"]),
    ("split", &["split"]),
    ("spread", &["spread"]),
    ("stab", &["stabbed"]),
    ("steal", &["stole", "stolen"]),
    ("strike", &["struck", "stricken"]),
    ("swear", &["swore", "sworn"]),
    ("take", &["took", "taken"]),
    ("teach", &["taught"]),
    ("tear", &["tore", "torn"]),
    ("tell", &["told"]),
    ("think", &["thought"]),
    ("throw", &["threw", "thrown"]),
    ("wed", &["wed", "wedded"]),
    ("win", &["won"]),
    ("withdraw", &["withdrew", "withdrawn"]),
    ("write", &["wrote", "written"]),
];

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Doubles a final consonant after a single vowel in short stems ("stab" → "stabb").
fn doubled(stem: &str) -> Option<String> {
    let cs: Vec<char> = stem.chars().collect();
    let n = cs.len();
    if !(3..=4).contains(&n) {
        return None;
    }
    let (a, b, c) = (cs[n - 3], cs[n - 2], cs[n - 1]);
    (!is_vowel(a) && is_vowel(b) && !is_vowel(c) && !matches!(c, 'w' | 'x' | 'y')).then(|| format!("{stem}{c}"))
}

/// The keyword itself, lowercased, followed by regular and irregular inflections.
pub fn variants(keyword: &str) -> Vec<String> {
    let w = keyword.to_lowercase();
    let mut out = vec![w.clone()];
    let mut push = |s: String| {
        if !out.contains(&s) {
            out.push(s);
        }
    };
    if let Some((_, forms)) = IRREGULAR.iter().find(|(base, _)| *base == w) {
        forms.iter().for_each(|f| push(f.to_string()));
    }
    if w.contains(' ') || w.is_empty() {
        return out;
    }
    let last = w.chars().last().unwrap();
    let before_last = w.chars().rev().nth(1);
    if last == 'e' {
        let stem = &w[..w.len() - 1];
        push(format!("{w}s"));
        push(format!("{w}d"));
        push(format!("{stem}ing"));
    } else if last == 'y' && before_last.is_some_and(|c| !is_vowel(c)) {
        let stem = &w[..w.len() - 1];
        push(format!("{stem}ies"));
        push(format!("{stem}ied"));
        push(format!("{w}ing"));
    } else {
        if w.ends_with('s') || w.ends_with('x') || w.ends_with("sh") || w.ends_with("ch") || w.ends_with('z') {
            push(format!("{w}es"));
        } else {
            push(format!("{w}s"));
        }
        push(format!("{w}ed"));
        push(format!("{w}ing"));
        if let Some(d) = doubled(&w) {
            push(format!("{d}ed"));
            push(format!("{d}ing"));
        }
    }
    out
}
