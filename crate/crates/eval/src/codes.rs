//! The 19 external MI codes used to annotate coach utterances.
//!
//! Names, definitions and consistency classes follow the MISC coding manual.
//! The manual's examples come from clinical counseling, so every code carries
//! three examples rewritten for physical-activity coaching. They are authored
//! catalog items, not quotations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExternalMICode {
    AdviseWithPermission,
    AdviseWithoutPermission,
    Affirm,
    Confront,
    Direct,
    EmphasizeControl,
    Facilitate,
    Filler,
    GivingInformation,
    OpenQuestion,
    ClosedQuestion,
    RaiseConcernWithPermission,
    RaiseConcernWithoutPermission,
    SimpleReflection,
    ComplexReflection,
    Reframe,
    Structure,
    Support,
    Warn,
    /// The coder could not assign any listed code.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Consistency {
    Consistent,
    Inconsistent,
    Neutral,
}

impl Consistency {
    pub const ALL: [Self; 3] = [Self::Consistent, Self::Inconsistent, Self::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Consistent => "MI-consistent",
            Self::Inconsistent => "MI-inconsistent",
            Self::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for Consistency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

struct CodeInfo {
    name: &'static str,
    definition: &'static str,
    examples: [&'static str; 3],
}

const CATALOG: [CodeInfo; 19] = [
    CodeInfo {
        name: "Advise With Permission",
        definition: "The counselor gives advice, makes a suggestion, or offers a solution or possible action with client permission. These will usually contain language that indicates that advice is being given: should, why don't you, consider, try, suggest, advise, you could, etc. Prior permission can be in the form of a request from the client, or in the counselor asking the client's permission to offer it. Indirect forms of permission asking may also occur, such as a counselor statement that gives the client permission to disregard the advice (\"This may or may not make sense to you\").",
        examples: [
            "Since you asked for ideas, one option would be a ten-minute walk right after lunch.",
            "Would it be okay if I shared a few ways other people fit exercise into a busy week?",
            "This may or may not suit you, but some people find that laying out their workout clothes the night before helps.",
        ],
    },
    CodeInfo {
        name: "Advise Without Permission",
        definition: "The counselor gives advice, makes a suggestion, or offers a solution or possible action without client permission.",
        examples: [
            "You should try jogging three mornings a week.",
            "Consider signing up for a yoga class at your local gym.",
            "Why don't you take the stairs instead of the elevator at work?",
        ],
    },
    CodeInfo {
        name: "Affirm",
        definition: "The counselor says something positive or complimentary to the client. It may be in the form of expressed appreciation, confidence or reinforcement.",
        examples: [
            "Walking every day last week took real commitment, well done.",
            "You clearly care a lot about being a good role model for your kids.",
            "I'm confident you can build on the progress you've already made.",
        ],
    },
    CodeInfo {
        name: "Confront",
        definition: "The counselor directly disagrees, argues, corrects, shames, blames, seeks to persuade, criticizes, judges, labels, moralizes, ridicules, or questions the client's honesty. These are the expert-like responses that have a particular negative-parent quality, an uneven power relationship accompanied by disapproval, disagreement, or negativity. There is a sense of “expert over-ride” of what the client says.",
        examples: [
            "Being too busy is just an excuse; everyone has thirty minutes.",
            "Your step counts say otherwise, so I doubt you walked every day.",
            "That's not really exercise if you're only strolling around the block.",
        ],
    },
    CodeInfo {
        name: "Direct",
        definition: "The counselor gives an order, command, or direction. The language is imperative.",
        examples: [
            "Go for a walk tonight after dinner.",
            "Write down your workout plan before you leave today.",
            "Stop skipping your morning stretches.",
        ],
    },
    CodeInfo {
        name: "Emphasize Control",
        definition: "The counselor directly acknowledges, honors, or emphasizes the client's freedom of choice, autonomy, personal responsibility, etc. There is no tone of blaming or faultfinding.",
        examples: [
            "It's entirely up to you which activities you include in your plan.",
            "You know your schedule best, so you decide what feels realistic.",
            "Whether you start this week or next is your call.",
        ],
    },
    CodeInfo {
        name: "Facilitate",
        definition: "These are simple utterances that function as keep going acknowledgments.",
        examples: ["Mm-hmm.", "I see, go on.", "Okay, tell me more."],
    },
    CodeInfo {
        name: "Filler",
        definition: "This is a code for the few responses that are not codeable elsewhere: pleasantries, etc. It should not be used often.",
        examples: [
            "Good morning!",
            "Nice to meet you.",
            "Hope you're having a good day so far.",
        ],
    },
    CodeInfo {
        name: "Giving Information",
        definition: "The counselor gives information to the client, explains something, educates or provides feedback or discloses personal information.",
        examples: [
            "Adults are generally recommended to get about 150 minutes of moderate activity each week.",
            "Your data shows an average of 6,200 steps per day over the last month.",
            "Brisk walking counts as moderate-intensity exercise.",
        ],
    },
    CodeInfo {
        name: "Open Question",
        definition: "The counselor asks a question in order to gather information, understand, or elicit the client's story. Generally these begin with a question marker word: Who, What, Why, When, How, Where, etc. An open question is coded when the counselor asks a question that allows a wide range of possible answers.",
        examples: [
            "What kinds of physical activity have you enjoyed in the past?",
            "How would being more active change your day-to-day life?",
            "What gets in the way of exercising during the week?",
        ],
    },
    CodeInfo {
        name: "Closed Question",
        definition: "The counselor asks a question in order to gather information, understand, or elicit the client's story. Generally these begin with a question marker word: Who, What, Why, When, How, Where, etc. A closed question implies a short answer: Yes or no, a specific fact, a number, etc.",
        examples: [
            "How many days did you exercise last week?",
            "Do you own a bike?",
            "Have you had any injuries that limit your activity?",
        ],
    },
    CodeInfo {
        name: "Raise Concern with Permission",
        definition: "The counselor points out a possible problem with a client's goal, plan, or intention with permission. Prior permission can be in the form of a request from the client or in the counselor asking the client's permission to offer it. Indirect forms of permission asking may also occur, such as a counselor’s statement that gives the client permission to disregard the counselor’s concern.",
        examples: [
            "Could I share a concern about running every single day right away?",
            "You asked what I think: going from zero to five workouts a week might be hard to sustain.",
            "Feel free to disregard this, but I wonder if late-night workouts could affect your sleep.",
        ],
    },
    CodeInfo {
        name: "Raise Concern without Permission",
        definition: "The counselor points out a possible problem with a client's goal, plan, or intention without permission.",
        examples: [
            "Running every day right away could lead to an injury.",
            "A two-hour workout after a long shift sounds like a recipe for burnout.",
            "Relying on the weather to walk outside might not work in the winter.",
        ],
    },
    CodeInfo {
        name: "Simple Reflection",
        definition: "A reflection is a reflective listening statement made by the counselor in response to a client statement. Reflections capture and return to the client something that the client has said. Simple Reflections add little or no meaning or emphasis to what the client has said.",
        examples: [
            "You've been walking about twice a week.",
            "Work has been keeping you busy lately.",
            "You enjoy swimming more than running.",
        ],
    },
    CodeInfo {
        name: "Complex Reflection",
        definition: "A reflection is a reflective listening statement made by the counselor in response to a client statement. Reflections capture and return to the client something that the client has said. Complex Reflections typically add substantial meaning or emphasis to what the client has said.",
        examples: [
            "Part of you wants to be more active, and part of you worries it won't last this time.",
            "Staying active seems tied to feeling like yourself again.",
            "It sounds like exercise used to be a way to unwind, and you miss having that outlet.",
        ],
    },
    CodeInfo {
        name: "Reframe",
        definition: "The counselor suggests a different meaning for an experience expressed by the client, placing it in a new light. These generally have the quality of changing the emotional valence of meaning from negative to positive or from positive to negative. Reframes generally meet the criteria for Reflect but go further than adding meaning or emphasis by actually changing the valence of meaning and not just the depth.",
        examples: [
            "Missing a few workouts shows you where your plan needs more flexibility, not that you failed.",
            "Feeling sore means your body is adapting to something new.",
            "Your busy schedule also means you're already good at planning, which will help here.",
        ],
    },
    CodeInfo {
        name: "Structure",
        definition: "To give information about what’s going to happen directly to the client throughout the course of treatment or within a study format, in this or subsequent sessions. To make a transition from one part of a session to another.",
        examples: [
            "Today we'll talk about your past experience and then set a goal together.",
            "Now that we've covered your motivation, let's move on to planning.",
            "Before we wrap up, I'd like to summarize your plan.",
        ],
    },
    CodeInfo {
        name: "Support",
        definition: "These are generally sympathetic, compassionate, or understanding comments. They have the quality of agreeing or siding with the client.",
        examples: [
            "It's completely understandable to feel tired after a long day at work.",
            "Getting back into a routine after being sick is hard for a lot of people.",
            "That sounds really frustrating.",
        ],
    },
    CodeInfo {
        name: "Warn",
        definition: "The counselor provides a warning or threat, implying negative consequences unless the client takes a certain action. It may be a threat that the counselor has the perceived power to carry out or simply the prediction of a bad outcome if the client takes a certain course.",
        examples: [
            "If you don't start exercising, your health is going to get worse.",
            "Keep skipping workouts and you'll lose all the progress you've made.",
            "You'll end up with heart problems unless you become more active.",
        ],
    },
];

impl ExternalMICode {
    /// The 19 codes, without `Unknown`.
    pub const ALL: [Self; 19] = [
        Self::AdviseWithPermission,
        Self::AdviseWithoutPermission,
        Self::Affirm,
        Self::Confront,
        Self::Direct,
        Self::EmphasizeControl,
        Self::Facilitate,
        Self::Filler,
        Self::GivingInformation,
        Self::OpenQuestion,
        Self::ClosedQuestion,
        Self::RaiseConcernWithPermission,
        Self::RaiseConcernWithoutPermission,
        Self::SimpleReflection,
        Self::ComplexReflection,
        Self::Reframe,
        Self::Structure,
        Self::Support,
        Self::Warn,
    ];

    fn info(self) -> Option<&'static CodeInfo> {
        Self::ALL.iter().position(|c| *c == self).map(|i| &CATALOG[i])
    }

    pub fn name(self) -> &'static str {
        self.info().map_or("Unknown", |i| i.name)
    }

    pub fn definition(self) -> &'static str {
        self.info().map_or("", |i| i.definition)
    }

    /// Three positive examples; empty for `Unknown`.
    pub fn examples(self) -> &'static [&'static str] {
        self.info().map_or(&[], |i| &i.examples)
    }

    pub fn consistency(self) -> Option<Consistency> {
        classify_consistency(self)
    }

    /// Exact match on the normalized name. Also accepts the misspelling
    /// "Closed Quesiton" found in circulated copies of the code table.
    pub fn from_name(raw: &str) -> Option<Self> {
        let key = normalize(raw);
        if key == "unknown" {
            return Some(Self::Unknown);
        }
        if key == "closedquesiton" {
            return Some(Self::ClosedQuestion);
        }
        Self::ALL.into_iter().find(|c| normalize(c.name()) == key)
    }
}

impl fmt::Display for ExternalMICode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExternalMICode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_name(s).ok_or_else(|| format!("unknown MI code '{s}'"))
    }
}

pub(crate) fn normalize(raw: &str) -> String {
    raw.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// The fixed consistency mapping; `None` for `Unknown`.
pub fn classify_consistency(code: ExternalMICode) -> Option<Consistency> {
    use ExternalMICode::*;
    match code {
        AdviseWithPermission | Affirm | EmphasizeControl | OpenQuestion | SimpleReflection | ComplexReflection
        | Reframe | Support => Some(Consistency::Consistent),
        AdviseWithoutPermission | Confront | Direct | RaiseConcernWithoutPermission | Warn => {
            Some(Consistency::Inconsistent)
        }
        Facilitate | Filler | GivingInformation | ClosedQuestion | RaiseConcernWithPermission | Structure => {
            Some(Consistency::Neutral)
        }
        Unknown => None,
    }
}
