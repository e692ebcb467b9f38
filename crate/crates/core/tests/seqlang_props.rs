mod common;

use proptest::prelude::*;
use spinterface::seqlang::{expand, parse_str, serialize, Dimension, PulseSequence, SeqErrorKind, Statement, StatementKind, Unit};

use common::SeqBuilder;

const UNITS: [Unit; 10] = [
    Unit::Ns,
    Unit::Us,
    Unit::Ms,
    Unit::S,
    Unit::Hz,
    Unit::KHz,
    Unit::MHz,
    Unit::GHz,
    Unit::MilliTesla,
    Unit::Tesla,
];

// statement template with the slot marked by `{}` and the slot's dimension
const SLOTS: [(&str, Dimension); 9] = [
    ("laser {}", Dimension::Time),
    ("laser 1us power={}", Dimension::Dimensionless),
    ("laser 1us measure {}", Dimension::Time),
    ("wait {}", Dimension::Time),
    ("mw {}", Dimension::Time),
    ("mw pi f={}", Dimension::Frequency),
    ("mw pi amp={}", Dimension::Dimensionless),
    ("mw pi phase={}", Dimension::Dimensionless),
    ("measure {}", Dimension::Time),
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_then_parse_is_identity(data in prop::collection::vec(any::<u32>(), 0..200)) {
        let seq = SeqBuilder::build(&data);
        let text = serialize(&seq);
        let back = parse_str(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &seq);
        prop_assert_eq!(serialize(&back), text);
    }

    #[test]
    fn expansion_count_is_product_of_steps(data in prop::collection::vec(any::<u32>(), 0..200)) {
        let seq = SeqBuilder::build(&data);
        let count = step_product(&seq.statements);
        prop_assume!(count.is_some_and(|c| c <= 100_000));
        let points = expand(&seq).unwrap();
        prop_assert_eq!(Some(points.len()), count);
        for p in &points {
            prop_assert!(!contains_sweep(&p.sequence));
        }
    }

    #[test]
    fn slot_accepts_exactly_its_dimension(slot in 0..SLOTS.len(), unit in prop::option::of(0..UNITS.len()), m in 0u32..100_000) {
        let (template, dim) = SLOTS[slot];
        let (lit, lit_dim) = match unit {
            Some(u) => (format!("{m}{}", UNITS[u].symbol()), UNITS[u].dimension()),
            None => (m.to_string(), Dimension::Dimensionless),
        };
        let text = template.replace("{}", &lit);
        match parse_str(&text) {
            Ok(_) => prop_assert_eq!(lit_dim, dim, "{} parsed", text),
            Err(e) => {
                prop_assert_ne!(lit_dim, dim, "{} rejected: {}", text, e);
                prop_assert_eq!(e.kind, SeqErrorKind::Type);
                prop_assert_eq!(e.span.line, 1);
                prop_assert_eq!(e.span.col, template.find("{}").unwrap() + 1);
            }
        }
    }

    #[test]
    fn errors_point_inside_the_input(text in "[a-z0-9 =./{}\\n#-]{0,60}") {
        if let Err(e) = parse_str(&text) {
            let lines: Vec<&str> = text.split('\n').collect();
            prop_assert!(e.span.line >= 1 && e.span.line <= lines.len(), "{:?} {:?}", e, text);
            let width = lines[e.span.line - 1].chars().count();
            prop_assert!(e.span.col >= 1 && e.span.col <= width + 1, "{:?} {:?}", e, text);
            let prefix = format!("{}:{}: ", e.span.line, e.span.col);
            prop_assert!(e.to_string().starts_with(&prefix), "{}", e);
        }
    }
}

#[test]
fn negative_dimensional_literals_are_rejected() {
    for text in ["wait -1us", "mw pi f=-3GHz", "laser -5ns"] {
        assert_eq!(parse_str(text).unwrap_err().kind, SeqErrorKind::Type, "{text}");
    }
    assert!(parse_str("mw pi phase=-90").is_ok());
}

fn step_product(stmts: &[Statement]) -> Option<usize> {
    stmts.iter().try_fold(1usize, |acc, s| match &s.kind {
        StatementKind::Sweep(sw) => acc.checked_mul(sw.steps)?.checked_mul(step_product(&sw.body)?),
        _ => Some(acc),
    })
}

fn contains_sweep(seq: &PulseSequence) -> bool {
    seq.statements.iter().any(|s| matches!(s.kind, StatementKind::Sweep(_)))
}
