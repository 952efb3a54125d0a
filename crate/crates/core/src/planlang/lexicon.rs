//! Closed word lists for the plan grammar.

use super::{Descriptor, Ordinal, Size};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Verb {
    Place,
    Put,
    Stack,
    Position,
    Move,
    Lay,
    Set,
    Rotate,
    Stand,
    Climb,
    Jump,
}

/// Verb and whether the form can head a passive ("is placed").
pub(crate) fn verb(word: &str) -> Option<(Verb, bool)> {
    use Verb::*;
    let v = match word {
        "place" | "places" | "placing" => (Place, false),
        "placed" => (Place, true),
        "put" => (Put, true),
        "puts" | "putting" => (Put, false),
        "stack" | "stacks" | "stacking" => (Stack, false),
        "stacked" => (Stack, true),
        "position" | "positions" | "positioning" => (Position, false),
        "positioned" => (Position, true),
        "move" | "moves" | "moving" => (Move, false),
        "moved" => (Move, true),
        "lay" | "lays" | "laying" => (Lay, false),
        "laid" => (Lay, true),
        "set" => (Set, true),
        "sets" | "setting" => (Set, false),
        "rotate" | "rotates" | "rotating" => (Rotate, false),
        "rotated" => (Rotate, true),
        "stand" | "stands" | "standing" => (Stand, false),
        "stood" => (Stand, true),
        "climb" | "climbs" | "climbing" | "climbed" => (Climb, false),
        "jump" | "jumps" | "jumping" | "jumped" => (Jump, false),
        _ => return None,
    };
    Some(v)
}

pub(crate) const SHAPES: [&str; 10] = [
    "cube",
    "cuboid",
    "pyramid",
    "wedge",
    "sphere",
    "egg",
    "ellipsoid",
    "capsule",
    "cylinder",
    "platform",
];

/// Canonical shape for a noun, and whether the noun was plural.
pub(crate) fn shape_noun(word: &str) -> Option<(&'static str, bool)> {
    let (stem, plural) = match word {
        "box" | "block" => ("cube", false),
        "boxes" | "blocks" => ("cube", true),
        "brick" => ("cuboid", false),
        "bricks" => ("cuboid", true),
        "ball" => ("sphere", false),
        "balls" => ("sphere", true),
        "ramp" => ("wedge", false),
        "ramps" => ("wedge", true),
        _ => {
            if let Some(s) = SHAPES.iter().find(|s| **s == word) {
                return Some((s, false));
            }
            let single = word.strip_suffix('s')?;
            let s = SHAPES.iter().find(|s| **s == single)?;
            return Some((s, true));
        }
    };
    Some((stem, plural))
}

pub(crate) fn plural(noun: &str) -> String {
    format!("{noun}s")
}

pub(crate) const COLORS: [&str; 12] = [
    "blue", "red", "green", "yellow", "white", "black", "gray", "orange", "purple", "brown", "pink", "cyan",
];

pub(crate) fn color(word: &str) -> Option<&'static str> {
    if word == "grey" {
        return Some("gray");
    }
    COLORS.iter().find(|c| **c == word).copied()
}

pub(crate) fn size(word: &str) -> Option<Size> {
    match word {
        "large" | "larger" | "largest" | "big" | "bigger" | "biggest" => Some(Size::Large),
        "small" | "smaller" | "smallest" | "little" => Some(Size::Small),
        _ => None,
    }
}

pub(crate) fn size_word(s: Size) -> &'static str {
    match s {
        Size::Large => "large",
        Size::Small => "small",
    }
}

/// Descriptor used as an adjective before the noun.
pub(crate) fn descriptor_adjective(word: &str) -> Option<Descriptor> {
    match word {
        "left" | "leftmost" => Some(Descriptor::Left),
        "right" | "rightmost" => Some(Descriptor::Right),
        "front" | "nearest" | "closest" | "near" | "nearer" | "closer" => Some(Descriptor::Front),
        "back" | "rear" | "farthest" | "furthest" | "far" => Some(Descriptor::Back),
        _ => None,
    }
}

pub(crate) fn descriptor_phrase(d: Descriptor) -> &'static str {
    match d {
        Descriptor::Left => "on the left",
        Descriptor::Right => "on the right",
        Descriptor::Front => "in the front",
        Descriptor::Back => "in the back",
    }
}

pub(crate) fn ordinal(word: &str) -> Option<Ordinal> {
    match word {
        "other" | "another" => Some(Ordinal::Other),
        "first" => Some(Ordinal::Nth(0)),
        "second" => Some(Ordinal::Nth(1)),
        "third" => Some(Ordinal::Nth(2)),
        "fourth" => Some(Ordinal::Nth(3)),
        "fifth" => Some(Ordinal::Nth(4)),
        _ => None,
    }
}

pub(crate) fn ordinal_word(n: u8) -> Option<&'static str> {
    ["first", "second", "third", "fourth", "fifth"].get(n as usize).copied()
}

pub(crate) fn quantity(word: &str) -> Option<usize> {
    match word {
        "two" | "both" | "pair" => Some(2),
        "three" => Some(3),
        _ => None,
    }
}

pub(crate) fn is_determiner(word: &str) -> bool {
    matches!(
        word,
        "the" | "a" | "an" | "one" | "this" | "that" | "these" | "those" | "your" | "any"
    )
}

pub(crate) fn is_be(word: &str) -> bool {
    matches!(
        word,
        "be" | "is" | "are" | "was" | "were" | "been" | "being" | "get" | "gets"
    )
}

/// Words that end a noun phrase and never name an object themselves.
pub(crate) fn is_stop(word: &str) -> bool {
    matches!(
        word,
        "," | "and"
            | "or"
            | "on"
            | "onto"
            | "upon"
            | "atop"
            | "in"
            | "into"
            | "at"
            | "to"
            | "of"
            | "next"
            | "beside"
            | "behind"
            | "by"
            | "near"
            | "with"
            | "from"
            | "for"
            | "so"
            | "that"
            | "which"
            | "then"
            | "top"
            | "each"
            | "it"
            | "its"
            | "you"
            | "up"
            | "down"
            | "over"
            | "under"
            | "should"
            | "can"
            | "could"
            | "will"
            | "would"
            | "must"
            | "be"
            | "is"
            | "are"
            | "was"
            | "were"
            | "as"
            | "alongside"
            | "against"
            | "front"
            | "back"
            | "side"
            | "left"
            | "right"
            | "until"
            | "while"
            | "carefully"
            | "gently"
            | "also"
    ) || verb(word).is_some()
}
