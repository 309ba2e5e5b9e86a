use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DialogueError, Expects};

const EMBEDDED: &str = include_str!("../../data/templates.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub text: String,
    pub expects: Expects,
}

/// Keys the engine renders, with the reply contract each must declare and
/// the slots it may use. Wording is free; the contract is not.
const SCHEMA: &[(&str, Expects, &[&str])] = &[
    ("greet", Expects::None, &["name", "first"]),
    ("confirm_identity", Expects::YesNo, &["name", "first"]),
    ("second_guess", Expects::YesNo, &["name", "first"]),
    ("ask_name", Expects::Name, &[]),
    ("name_ack", Expects::None, &["name", "first"]),
    ("status_comment", Expects::YesNo, &["status", "first"]),
    (
        "mutual_friend_status",
        Expects::YesNo,
        &["friend", "friend_first", "status"],
    ),
    ("new_photo", Expects::YesNo, &["friend", "friend_first"]),
    (
        "past_encounter",
        Expects::YesNo,
        &["friend", "friend_first", "ago"],
    ),
    ("offer_connect", Expects::YesNo, &["friend", "friend_first"]),
    ("general_news", Expects::YesNo, &["item"]),
    ("prescripted", Expects::FreeText, &["item", "first"]),
    ("ack_yes", Expects::None, &["first"]),
    ("ack_no", Expects::None, &["first"]),
    ("ack_text", Expects::None, &["first"]),
    ("connect_sent", Expects::None, &["friend", "friend_first"]),
    ("send_reminder", Expects::None, &["first"]),
    ("farewell_named", Expects::None, &["name", "first"]),
    ("farewell_anonymous", Expects::None, &[]),
    ("msg_status", Expects::None, &["name"]),
    (
        "msg_connect",
        Expects::None,
        &["friend_first", "user_first", "friend", "user"],
    ),
    ("msg_reminder", Expects::None, &["first", "topic"]),
];

/// Validated utterance table. Construction checks every required key is
/// present, declares the contracted `expects`, and uses only known slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateTable {
    entries: BTreeMap<String, Template>,
}

impl TemplateTable {
    /// The table shipped in `data/templates.json`.
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED).expect("embedded template table is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, DialogueError> {
        let entries: BTreeMap<String, Template> =
            serde_json::from_str(text).map_err(|e| DialogueError::Template(e.to_string()))?;
        for (key, expects, slots) in SCHEMA {
            let t = entries
                .get(*key)
                .ok_or_else(|| DialogueError::Template(format!("missing template '{key}'")))?;
            if t.expects != *expects {
                return Err(DialogueError::Template(format!(
                    "template '{key}' must expect {expects:?}, found {:?}",
                    t.expects
                )));
            }
            if t.text.trim().is_empty() {
                return Err(DialogueError::Template(format!(
                    "template '{key}' is empty"
                )));
            }
            for slot in slot_names(&t.text)? {
                if !slots.contains(&slot.as_str()) {
                    return Err(DialogueError::Template(format!(
                        "template '{key}' uses unknown slot '{{{slot}}}'"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, DialogueError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DialogueError::Template(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn get(&self, key: &str) -> &Template {
        self.entries
            .get(key)
            .unwrap_or_else(|| panic!("template '{key}' validated at construction"))
    }

    /// Renders `key`, substituting `{slot}` occurrences. Slot values are not
    /// re-scanned, so user-supplied text containing braces is inert.
    pub fn render(&self, key: &str, slots: &[(&str, &str)]) -> (String, Expects) {
        let t = self.get(key);
        let mut out = String::with_capacity(t.text.len());
        let mut rest = t.text.as_str();
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = rest[open..].find('}').map(|c| open + c);
            match close {
                Some(close) => {
                    let name = &rest[open + 1..close];
                    let value = slots.iter().find(|(k, _)| *k == name).map(|(_, v)| *v);
                    out.push_str(value.unwrap_or(""));
                    rest = &rest[close + 1..];
                }
                None => {
                    out.push_str(&rest[open..]);
                    rest = "";
                }
            }
        }
        out.push_str(rest);
        (out, t.expects)
    }
}

impl Default for TemplateTable {
    fn default() -> Self {
        Self::embedded()
    }
}

fn slot_names(text: &str) -> Result<Vec<String>, DialogueError> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| DialogueError::Template(format!("unclosed slot in '{text}'")))?;
        out.push(rest[open + 1..open + close].to_string());
        rest = &rest[open + close + 1..];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_table_validates() {
        let t = TemplateTable::embedded();
        let (text, e) = t.render(
            "confirm_identity",
            &[("name", "Dana Voss"), ("first", "Dana")],
        );
        assert!(text.contains("Dana Voss"));
        assert_eq!(e, Expects::YesNo);
    }

    #[test]
    fn wrong_expects_is_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(EMBEDDED).unwrap();
        v["ask_name"]["expects"] = "yes_no".into();
        let err = TemplateTable::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("ask_name"));
    }

    #[test]
    fn unknown_slot_is_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(EMBEDDED).unwrap();
        v["greet"]["text"] = "Hi {nickname}".into();
        assert!(TemplateTable::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn braces_in_values_are_not_expanded() {
        let t = TemplateTable::embedded();
        let (text, _) = t.render("status_comment", &[("status", "{first}"), ("first", "X")]);
        assert!(text.contains("\"{first}\""));
    }
}
