mod common;

use serde::Deserialize;

use common::fixture;
use newsgallery_core::media_ingest::{
    matches_phrase, search_media, FixtureConnector, SearchOptions,
};
use proptest::prelude::*;

#[derive(Deserialize)]
struct Case {
    text: String,
    phrase: String,
    matches: bool,
}

#[test]
fn agrees_with_python_casefold_oracle() {
    let text = std::fs::read_to_string(fixture("relevance/casefold_oracle.json")).unwrap();
    let cases: Vec<Case> = serde_json::from_str(&text).unwrap();
    assert!(cases.len() > 100);
    for c in &cases {
        assert_eq!(
            matches_phrase(&c.text, &c.phrase).unwrap(),
            c.matches,
            "{:?} in {:?}",
            c.phrase,
            c.text
        );
    }
}

#[test]
fn nofilter_corpus_is_rejected_for_every_term_form() {
    let c = FixtureConnector::new("fx", fixture("relevance/nofilter"));
    for term in [
        "2014 Winter Olympics",
        "2014 winter olympics",
        "  2014   WINTER OLYMPICS ",
    ] {
        let out = search_media(
            &[term.to_string()],
            std::slice::from_ref(&c),
            SearchOptions::default(),
        )
        .unwrap();
        assert!(out.items.is_empty(), "{term:?}");
    }
}

#[test]
fn tags_count_as_text() {
    let c = FixtureConnector::new("fx", fixture("relevance/matched"));
    let out = search_media(
        &["2014 Winter Olympics".to_string()],
        &[c],
        SearchOptions::default(),
    )
    .unwrap();
    assert!(out.items.iter().any(|i| i.item_id == "fx:m-tag"));
}

fn word() -> impl Strategy<Value = String> {
    "[a-zA-ZäöüßéÉ0-9]{1,8}"
}

proptest! {
    #[test]
    fn phrase_matches_itself_in_any_case_and_spacing(
        words in prop::collection::vec(word(), 1..4),
        pre in word(),
        post in word(),
        upper in any::<bool>(),
    ) {
        let phrase = words.join(" ");
        let shown = if upper { phrase.to_uppercase() } else { phrase.to_lowercase() };
        let text = format!("{pre} {}  {post}", shown.replace(' ', " \t "));
        prop_assert!(matches_phrase(&text, &phrase).unwrap());
    }

    #[test]
    fn glued_phrase_does_not_match(words in prop::collection::vec(word(), 1..4), glue in "[a-z0-9]{1,3}") {
        let phrase = words.join(" ");
        let text = format!("{glue}{phrase}{glue}");
        // only a later, properly delimited occurrence could match, and there is none
        prop_assume!(!text[glue.len()..].contains(&format!(" {phrase} ")));
        prop_assert!(!matches_phrase(&text, &phrase).unwrap());
    }

    #[test]
    fn match_is_case_insensitive(text in "[a-zA-Z ]{0,30}", phrase in "[a-zA-Z]{1,6}( [a-zA-Z]{1,6})?") {
        let a = matches_phrase(&text, &phrase).unwrap();
        prop_assert_eq!(a, matches_phrase(&text.to_uppercase(), &phrase.to_lowercase()).unwrap());
    }
}
