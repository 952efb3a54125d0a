//! Canonical text for plans. `parse(render(p)) == p` for plans whose ignored
//! text contains no lexicon verbs.

use super::lexicon;
use super::{Action, ObjectRef, Ordinal, Orientation, Plan, Region};

pub fn render_ref(r: &ObjectRef) -> String {
    if r.is_pronoun() {
        return "it".into();
    }
    let mut words = vec!["the".to_string()];
    match r.ordinal {
        Ordinal::Any => {}
        Ordinal::Other => words.push("other".into()),
        Ordinal::Nth(n) => words.push(lexicon::ordinal_word(n).map_or_else(|| format!("{}th", n + 1), str::to_string)),
    }
    if let Some(s) = r.size {
        words.push(lexicon::size_word(s).into());
    }
    if let Some(c) = &r.color {
        words.push(c.clone());
    }
    if r.stack {
        words.push(format!("stack of {}", lexicon::plural(&r.noun)));
    } else {
        words.push(r.noun.clone());
    }
    if let Some(d) = r.position {
        words.push(lexicon::descriptor_phrase(d).into());
    }
    words.join(" ")
}

fn orientation(o: Option<Orientation>) -> &'static str {
    match o {
        None => "",
        Some(Orientation::Upright) => " upright",
        Some(Orientation::OnSide) => " on its side",
    }
}

pub fn render_action(a: &Action) -> String {
    match a {
        Action::PlaceOn {
            object,
            base,
            orientation: o,
        } => format!(
            "Place {}{} on top of {}.",
            render_ref(object),
            orientation(*o),
            render_ref(base)
        ),
        Action::PlaceAt {
            object,
            region,
            orientation: o,
        } => {
            let where_ = match region {
                Region::Ground => "on the ground".to_string(),
                Region::Beside(r) => format!("next to {}", render_ref(r)),
                Region::InFrontOf(r) => format!("in front of {}", render_ref(r)),
                Region::Behind(r) => format!("behind {}", render_ref(r)),
            };
            format!("Place {}{} {}.", render_ref(object), orientation(*o), where_)
        }
        Action::Rotate { object, orientation: o } => {
            format!("Rotate {}{}.", render_ref(object), orientation(Some(*o)))
        }
        Action::Climb { target } => format!("Climb onto {}.", render_ref(target)),
        Action::Ignore { text } => text.clone(),
    }
}

/// One step per line.
pub fn render(plan: &Plan) -> String {
    plan.steps.iter().map(render_action).collect::<Vec<_>>().join("\n")
}
