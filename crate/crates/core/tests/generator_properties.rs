use figura_core::dialogue::tokenize;
use figura_core::generator::{
    GeneratedMetaphor, Generator, MetaphorTriplet, ADJECTIVE_TEMPLATES, AS_AS, JUST_LIKE,
};
use figura_core::pos::Pos;
use proptest::prelude::*;

fn adjective(target: &str, source: &str, connector: &str) -> MetaphorTriplet {
    MetaphorTriplet {
        target: target.into(),
        source: source.into(),
        connector: connector.into(),
        pos: Pos::Adjective,
        evidence: None,
    }
}

#[test]
fn title_and_two_round_strings_render_exactly() {
    let g = Generator::default();
    let love = g.render_adjective(&adjective("love", "math", "complex"), AS_AS).unwrap();
    assert_eq!(love.text, "Love is as complex as math.");
    let heart = g.render_adjective(&adjective("heart", "diamond", "shining"), JUST_LIKE).unwrap();
    let forms = g.expression_forms(&heart).unwrap();
    assert_eq!(forms.literal, "Heart is shining.");
    assert_eq!(forms.two_round.prompt, "I heard that heart is like a diamond. Do you know why?");
    assert_eq!(forms.two_round.reveal, "Because both are shining.");
}

const TEMPLATE_WORDS: [&str; 16] = [
    "i", "heard", "that", "is", "like", "a", "an", "do", "you", "know", "why", "because", "both",
    "are", "as", "just",
];

fn word() -> impl Strategy<Value = String> {
    "[a-z]{3,9}".prop_filter("not a template word", |w| !TEMPLATE_WORDS.contains(&w.as_str()))
}

fn rendered(g: &Generator, t: &MetaphorTriplet, template: &str) -> GeneratedMetaphor {
    g.render_adjective(t, template).unwrap()
}

proptest! {
    #[test]
    fn rendering_round_trips_and_is_deterministic(
        target in word(),
        source in word(),
        connector in word(),
        template in prop::sample::select(ADJECTIVE_TEMPLATES.to_vec()),
    ) {
        prop_assume!(target != source && connector != target && connector != source);
        let g = Generator::default();
        let t = adjective(&target, &source, &connector);
        let m = rendered(&g, &t, template);
        prop_assert_eq!(&m, &rendered(&g, &t, template));
        let tokens = tokenize(&m.text);
        for w in [&target, &source, &connector] {
            prop_assert!(tokens.contains(w), "{} missing from {}", w, m.text);
        }
        prop_assert!(m.text.chars().next().unwrap().is_uppercase());

        let forms = g.expression_forms(&m).unwrap();
        prop_assert_eq!(&forms.one_round, &m.text);
        prop_assert!(forms.two_round.prompt.contains(&m.comparison));
        prop_assert!(forms.two_round.prompt.ends_with('?'));
        prop_assert!(!tokenize(&forms.two_round.prompt).contains(&connector));
        prop_assert!(tokenize(&forms.two_round.reveal).contains(&connector));
        prop_assert!(tokenize(&forms.literal).contains(&connector));
        prop_assert!(!tokenize(&forms.literal).contains(&source));
    }
}
