//! Pattern grammar over verb frames.
//!
//! Text is cut into clauses (sentences, list items, `;`, `then`, and
//! coordinated imperatives), and each clause is matched against
//! `VERB objects [orientation] [preposition anchor]`. Anything without a
//! lexicon verb becomes [`Action::Ignore`].

use super::lexicon::{self, Verb};
use super::{Action, Descriptor, ObjectRef, Ordinal, Orientation, Plan, Region};

pub fn parse(text: &str) -> Plan {
    let mut steps = Vec::new();
    for seg in segments(text) {
        let actions = parse_clause(&seg);
        if actions.is_empty() {
            steps.push(Action::Ignore { text: seg });
        } else {
            steps.extend(actions);
        }
    }
    Plan { steps }
}

fn strip_marker(line: &str) -> &str {
    let t = line.trim_start();
    let digits = t.bytes().take_while(u8::is_ascii_digit).count();
    if digits > 0 {
        let rest = &t[digits..];
        if let Some(r) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
            if r.is_empty() || r.starts_with(char::is_whitespace) {
                return r.trim_start();
            }
        }
    }
    for m in ["- ", "* ", "• "] {
        if let Some(r) = t.strip_prefix(m) {
            return r.trim_start();
        }
    }
    if t.get(..5).is_some_and(|p| p.eq_ignore_ascii_case("step ")) {
        let rest = &t[5..];
        let d = rest.bytes().take_while(u8::is_ascii_digit).count();
        if d > 0 {
            if let Some(r) = rest[d..].strip_prefix(':').or_else(|| rest[d..].strip_prefix('.')) {
                return r.trim_start();
            }
        }
    }
    t
}

/// Sentence-level pieces: split after `.!?;:` when followed by whitespace.
fn sentences(line: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut it = line.char_indices().peekable();
    while let Some((i, c)) = it.next() {
        if matches!(c, '.' | '!' | '?' | ';' | ':') {
            let end = i + c.len_utf8();
            let boundary = it.peek().is_none_or(|(_, n)| n.is_whitespace());
            if boundary {
                let piece = if matches!(c, ';' | ':') {
                    &line[start..i]
                } else {
                    &line[start..end]
                };
                out.push(piece);
                start = end;
            }
        }
    }
    out.push(&line[start..]);
    out
}

fn norm(word: &str) -> String {
    word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '-' || c == '\''))
        .to_lowercase()
}

fn tidy(seg: &str) -> String {
    let mut s = seg.trim().trim_start_matches(',').trim();
    loop {
        let before = s;
        s = s.trim_end_matches(',').trim_end();
        if let Some(r) = s.strip_suffix(" and") {
            s = r.trim_end();
        }
        if let Some(r) = s.strip_prefix("and ").or_else(|| s.strip_prefix("And ")) {
            s = r.trim_start();
        }
        if s == before {
            break;
        }
    }
    s.to_string()
}

fn clauses(sentence: &str) -> Vec<String> {
    let words: Vec<(usize, &str)> = sentence
        .split_whitespace()
        .map(|w| (w.as_ptr() as usize - sentence.as_ptr() as usize, w))
        .collect();
    let normed: Vec<String> = words.iter().map(|(_, w)| norm(w)).collect();
    let mut out = Vec::new();
    let mut seg_start = 0usize;
    let mut seg_first = 0usize;
    for k in 0..words.len() {
        let (pos, raw) = words[k];
        let w = normed[k].as_str();
        if w == "then" {
            out.push(tidy(&sentence[seg_start..pos]));
            seg_start = pos + raw.len();
            seg_first = k + 1;
            continue;
        }
        if k == 0 || k <= seg_first {
            continue;
        }
        let prev_raw = words[k - 1].1;
        let joined = prev_raw.ends_with(',') || normed[k - 1] == "and";
        if joined
            && is_verb_at(&normed, k)
            && normed[seg_first..k]
                .iter()
                .enumerate()
                .any(|(j, _)| is_verb_at(&normed[seg_first..k], j))
        {
            out.push(tidy(&sentence[seg_start..pos]));
            seg_start = pos;
            seg_first = k;
        }
    }
    out.push(tidy(&sentence[seg_start..]));
    out.retain(|s| !s.is_empty());
    out
}

pub(crate) fn segments(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = strip_marker(line);
        for s in sentences(line) {
            out.extend(clauses(s));
        }
    }
    out
}

fn tokenize(text: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        let c = if c == '’' { '\'' } else { c };
        if c.is_alphanumeric()
            || c == '-'
            || c == '\''
            || (c == '.' && !cur.is_empty() && cur.chars().all(|d| d.is_ascii_digit()))
        {
            cur.extend(c.to_lowercase());
        } else {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
            if c == ',' {
                toks.push(",".into());
            }
        }
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    for t in &mut toks {
        while t.ends_with('.') || t.ends_with('\'') || t.ends_with('-') {
            t.pop();
        }
    }
    toks.retain(|t| !t.is_empty());
    toks
}

/// Whether `t[i]` is used as a verb rather than a noun ("the stack of cubes").
fn is_verb_at<S: AsRef<str>>(t: &[S], i: usize) -> bool {
    let w = t[i].as_ref();
    if lexicon::verb(w).is_none() {
        return false;
    }
    if i > 0 {
        let p = t[i - 1].as_ref();
        if lexicon::is_determiner(p) || p == "of" || lexicon::color(p).is_some() || lexicon::size(p).is_some() {
            return false;
        }
    }
    let next = t.get(i + 1).map(AsRef::as_ref);
    !(w == "stack" || w == "stacks") || next != Some("of")
}

fn starts_with(t: &[String], i: usize, pat: &[&str]) -> bool {
    t.len() >= i + pat.len() && pat.iter().zip(&t[i..]).all(|(p, w)| p == w)
}

const UPRIGHT: &[&[&str]] = &[
    &["on", "its", "flat", "side"],
    &["flat", "side", "down"],
    &["on", "its", "end"],
    &["on", "its", "base"],
    &["on", "end"],
    &["upright"],
    &["vertically"],
];

const ON_SIDE: &[&[&str]] = &[
    &["on", "its", "curved", "side"],
    &["on", "its", "round", "side"],
    &["on", "its", "side"],
    &["lying", "down"],
    &["horizontally"],
    &["sideways"],
];

/// Removes the first orientation phrase and returns it.
fn take_orientation(t: &mut Vec<String>) -> Option<Orientation> {
    for i in 0..t.len() {
        for (pats, o) in [(UPRIGHT, Orientation::Upright), (ON_SIDE, Orientation::OnSide)] {
            for pat in pats {
                if !starts_with(t, i, pat) {
                    continue;
                }
                // "the upright cylinder" names an object, it is not an instruction
                if pat.len() == 1 && t.get(i + 1).is_some_and(|n| lexicon::shape_noun(n).is_some()) {
                    continue;
                }
                t.drain(i..i + pat.len());
                return Some(o);
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
enum Np {
    Refs(Vec<ObjectRef>),
    Ground,
    EachOther,
}

fn is_ground(w: &str) -> bool {
    matches!(w, "ground" | "floor")
}

fn noun_at(t: &[String], j: usize) -> bool {
    lexicon::shape_noun(&t[j]).is_some()
        || is_ground(&t[j])
        || (t[j] == "stack" && t.get(j + 1).is_some_and(|n| n == "of"))
}

fn np(t: &[String], i: usize) -> Option<(Np, usize)> {
    if i >= t.len() {
        return None;
    }
    if starts_with(t, i, &["each", "other"]) || starts_with(t, i, &["one", "another"]) {
        return Some((Np::EachOther, i + 2));
    }
    if t[i] == "it" {
        return Some((Np::Refs(vec![ObjectRef::it()]), i + 1));
    }
    let mut r = ObjectRef::new("");
    let mut saw_det = false;
    let mut count = None;
    let mut plural = false;
    let mut j = i;
    loop {
        let w = t.get(j)?.as_str();
        if lexicon::is_determiner(w) {
            saw_det = true;
        } else if let Some(o) = lexicon::ordinal(w) {
            r.ordinal = o;
        } else if let Some(q) = lexicon::quantity(w) {
            count = Some(q);
        } else if let Some(c) = lexicon::color(w) {
            r.color = Some(c.to_string());
        } else if let Some(s) = lexicon::size(w) {
            r.size = Some(s);
        } else if let (Some(d), Some(n)) = (lexicon::descriptor_adjective(w), t.get(j + 1)) {
            if lexicon::is_stop(n) && !noun_at(t, j + 1) {
                return None;
            }
            r.position = Some(d);
        } else if is_ground(w) {
            return Some((Np::Ground, j + 1));
        } else if w == "stack" && t.get(j + 1).is_some_and(|n| n == "of") {
            let mut k = j + 2;
            if t.get(k).is_some_and(|n| n == "the") {
                k += 1;
            }
            let (shape, _) = lexicon::shape_noun(t.get(k)?)?;
            r.noun = shape.to_string();
            r.stack = true;
            j = k + 1;
            break;
        } else if let Some((shape, pl)) = lexicon::shape_noun(w) {
            r.noun = shape.to_string();
            plural = pl;
            j += 1;
            break;
        } else {
            if lexicon::is_stop(w) || !saw_det {
                return None;
            }
            // filler words before a known noun: "the 2-meter high platform"
            let ahead = (j + 1..t.len().min(j + 4))
                .take_while(|&k| !lexicon::is_stop(&t[k]))
                .find(|&k| noun_at(t, k));
            if let Some(k) = ahead {
                j = k;
                continue;
            }
            if !w.chars().all(|c| c.is_alphabetic()) {
                return None;
            }
            r.noun = w.to_string();
            j += 1;
            break;
        }
        j += 1;
    }
    // trailing descriptor: "the cylinder on the left"
    if t.get(j)
        .is_some_and(|w| matches!(w.as_str(), "on" | "to" | "at" | "in"))
        && t.get(j + 1).is_some_and(|w| w == "the" || w == "your")
        && t.get(j + 3).is_none_or(|w| w != "of")
    {
        let d = match t.get(j + 2).map(String::as_str) {
            Some("left") => Some(Descriptor::Left),
            Some("right") => Some(Descriptor::Right),
            Some("front") => Some(Descriptor::Front),
            Some("back") => Some(Descriptor::Back),
            _ => None,
        };
        if let Some(d) = d {
            r.position = Some(d);
            j += 3;
        }
    }
    let n = match count {
        Some(n) => n,
        None if plural && !r.stack => 2,
        None => 1,
    };
    let refs = if n > 1 && r.ordinal == Ordinal::Any {
        (0..n).map(|k| r.clone().nth(Ordinal::Nth(k as u8))).collect()
    } else {
        vec![r]
    };
    Some((Np::Refs(refs), j))
}

/// Coordinated noun phrases: "the cube, the sphere and the cylinder".
fn np_list(t: &[String], i: usize) -> Option<(Np, usize)> {
    let (first, mut j) = np(t, i)?;
    let Np::Refs(mut refs) = first else {
        return Some((first, j));
    };
    loop {
        let mut k = j;
        let mut sep = false;
        if t.get(k).is_some_and(|w| w == ",") {
            k += 1;
            sep = true;
        }
        if t.get(k).is_some_and(|w| w == "and") {
            k += 1;
            sep = true;
        } else if starts_with(t, k, &["as", "well", "as"]) {
            k += 3;
            sep = true;
        }
        if !sep {
            break;
        }
        match np(t, k) {
            Some((Np::Refs(more), next)) => {
                refs.extend(more);
                j = next;
            }
            _ => break,
        }
    }
    Some((Np::Refs(refs), j))
}

#[derive(Debug)]
enum Frame {
    On(Np),
    Beside(Np),
    Front(Np),
    Behind(Np),
    Chain,
}

const CHAIN: &[&[&str]] = &[
    &["on", "top", "of", "each", "other"],
    &["on", "top", "of", "one", "another"],
    &["one", "on", "top", "of", "the", "other"],
    &["on", "each", "other"],
    &["atop", "each", "other"],
];

const ON: &[&[&str]] = &[
    &["on", "top", "of"],
    &["to", "the", "top", "of"],
    &["onto"],
    &["on", "to"],
    &["upon"],
    &["atop"],
    &["on"],
    &["over"],
];

const BESIDE: &[&[&str]] = &[
    &["next", "to"],
    &["adjacent", "to"],
    &["to", "the", "left", "of"],
    &["to", "the", "right", "of"],
    &["to", "the", "side", "of"],
    &["at", "the", "base", "of"],
    &["beside"],
    &["alongside"],
    &["against"],
    &["near"],
    &["by"],
    &["at"],
];

const FRONT: &[&[&str]] = &[&["in", "front", "of"]];
const BEHIND: &[&[&str]] = &[&["in", "back", "of"], &["behind"]];

fn frame(t: &[String], i: usize) -> Option<Frame> {
    let mut k = i;
    while k < t.len() {
        for pat in CHAIN {
            if starts_with(t, k, pat) {
                return Some(Frame::Chain);
            }
        }
        type Make = fn(Np) -> Frame;
        let table: [(&[&[&str]], Make); 4] = [
            (FRONT, Frame::Front),
            (BEHIND, Frame::Behind),
            (BESIDE, Frame::Beside),
            (ON, Frame::On),
        ];
        for (pats, make) in table {
            for pat in pats {
                if starts_with(t, k, pat) {
                    if let Some((anchor, _)) = np(t, k + pat.len()) {
                        return Some(make(anchor));
                    }
                }
            }
        }
        // purpose clauses and asides end the search
        let w = t[k].as_str();
        if matches!(
            w,
            "," | "to" | "so" | "which" | "that" | "until" | "while" | "and" | "for"
        ) {
            return None;
        }
        k += 1;
    }
    None
}

fn first_ref(n: Np) -> Option<ObjectRef> {
    match n {
        Np::Refs(mut v) if !v.is_empty() => Some(v.swap_remove(0)),
        _ => None,
    }
}

fn climb_target(t: &[String], mut k: usize) -> Option<ObjectRef> {
    while t.get(k).is_some_and(|w| {
        matches!(
            w.as_str(),
            "up" | "onto" | "on" | "upon" | "atop" | "to" | "over" | "into"
        )
    }) {
        k += 1;
    }
    if starts_with(t, k, &["the", "top", "of"]) {
        k += 3;
    } else if starts_with(t, k, &["top", "of"]) {
        k += 2;
    }
    first_ref(np(t, k)?.0)
}

fn parse_clause(text: &str) -> Vec<Action> {
    let mut t = tokenize(text);
    let orientation = take_orientation(&mut t);
    let Some(v) = (0..t.len()).find(|&i| is_verb_at(&t, i)) else {
        return Vec::new();
    };
    let (verb, participle) = lexicon::verb(&t[v]).expect("verb at index");

    let stand_on = verb == Verb::Stand
        && t.get(v + 1)
            .is_some_and(|w| matches!(w.as_str(), "on" | "onto" | "upon" | "atop"));
    if matches!(verb, Verb::Climb | Verb::Jump) || stand_on {
        return climb_target(&t, v + 1)
            .map(|target| vec![Action::Climb { target }])
            .unwrap_or_default();
    }

    let passive = participle && v > 0 && t[..v].iter().rev().take(3).any(|w| lexicon::is_be(w));
    let (objects, after) = if passive {
        let subject = (0..v).find_map(|j| np_list(&t, j).filter(|(n, end)| *end <= v && matches!(n, Np::Refs(_))));
        match subject {
            Some((Np::Refs(r), _)) => (r, v + 1),
            _ => return Vec::new(),
        }
    } else {
        let mut k = v + 1;
        while t
            .get(k)
            .is_some_and(|w| matches!(w.as_str(), "up" | "down" | "carefully" | "gently"))
        {
            k += 1;
        }
        match np_list(&t, k) {
            Some((Np::Refs(r), end)) => (r, end),
            _ => return Vec::new(),
        }
    };
    let orientation = orientation.or(match verb {
        Verb::Stand => Some(Orientation::Upright),
        _ => None,
    });

    let each = |region: Region| -> Vec<Action> {
        objects
            .iter()
            .map(|o| Action::PlaceAt {
                object: o.clone(),
                region: region.clone(),
                orientation,
            })
            .collect()
    };
    let chain = |base: Option<ObjectRef>| -> Vec<Action> {
        let mut out = Vec::new();
        let mut below = base;
        for o in &objects {
            if let Some(b) = below {
                out.push(Action::PlaceOn {
                    object: o.clone(),
                    base: b,
                    orientation,
                });
            }
            below = Some(o.clone());
        }
        out
    };

    match frame(&t, after) {
        Some(Frame::Chain) => chain(None),
        Some(Frame::On(Np::Ground)) => each(Region::Ground),
        Some(Frame::On(Np::Refs(bases))) => {
            let base = bases.into_iter().next().expect("non-empty reference list");
            if verb == Verb::Stack {
                chain(Some(base))
            } else {
                objects
                    .iter()
                    .map(|o| Action::PlaceOn {
                        object: o.clone(),
                        base: base.clone(),
                        orientation,
                    })
                    .collect()
            }
        }
        Some(Frame::Beside(a)) => first_ref(a).map(|a| each(Region::Beside(a))).unwrap_or_default(),
        Some(Frame::Front(a)) => first_ref(a).map(|a| each(Region::InFrontOf(a))).unwrap_or_default(),
        Some(Frame::Behind(a)) => first_ref(a).map(|a| each(Region::Behind(a))).unwrap_or_default(),
        Some(Frame::On(Np::EachOther)) => chain(None),
        None => {
            if verb == Verb::Stack {
                chain(None)
            } else if let Some(o) = orientation {
                objects
                    .iter()
                    .map(|obj| Action::Rotate {
                        object: obj.clone(),
                        orientation: o,
                    })
                    .collect()
            } else if verb == Verb::Rotate {
                Vec::new()
            } else {
                each(Region::Ground)
            }
        }
    }
}
