//! Game of 24: combine four numbers with + − × ÷ to reach exactly 24.
//!
//! Everything here runs on exact rationals. Floating point is banned because
//! puzzles like 3 3 8 8 hinge on fractional intermediates (8 ÷ (3 − 8÷3))
//! where epsilon comparisons silently lie.

use super::{EnvError, Environment};
use crate::gateway::CallMeter;
use crate::generator::{CandidateSource, GenerationBatch, GenerationError, NodeDraft};
use crate::evaluators::AnswerJudge;
use crate::prompts::SiblingEntry;
use crate::types::{Action, AnswerVerdict, ErrorRecord, Node, Question};
use num_rational::Ratio;
use num_traits::Zero;

pub type Rational = Ratio<i64>;

pub const TARGET: i64 = 24;

/// Puzzle state: the numbers still on the table plus the operations applied
/// so far. `remaining` is kept sorted so equal multisets compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game24State {
    pub remaining: Vec<Rational>,
    pub history: Vec<String>,
}

impl Game24State {
    pub fn new(numbers: &[i64]) -> Self {
        let mut remaining: Vec<Rational> = numbers
            .iter()
            .map(|&n| Rational::from_integer(n))
            .collect();
        remaining.sort();
        Game24State {
            remaining,
            history: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Game24Error {
    OperandNotAvailable { operand: String },
    DivisionByZero,
    MalformedExpression { reason: String },
}

impl std::fmt::Display for Game24Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Game24Error::OperandNotAvailable { operand } => {
                write!(f, "operand_not_available: {operand}")
            }
            Game24Error::DivisionByZero => write!(f, "division_by_zero"),
            Game24Error::MalformedExpression { reason } => {
                write!(f, "malformed_expression: {reason}")
            }
        }
    }
}

impl std::error::Error for Game24Error {}

/// Renders a rational the way expressions spell them: integers plain,
/// fractions as `n/d`.
pub fn format_rational(r: Rational) -> String {
    if r.denom() == &1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn parse_rational(token: &str) -> Option<Rational> {
    match token.split_once('/') {
        Some((n, d)) => {
            let n: i64 = n.trim().parse().ok()?;
            let d: i64 = d.trim().parse().ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => token.trim().parse::<i64>().ok().map(Rational::from_integer),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op {
    fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '−',
            Op::Mul => '×',
            Op::Div => '÷',
        }
    }

    fn parse(token: &str) -> Option<Op> {
        match token {
            "+" => Some(Op::Add),
            "-" | "−" => Some(Op::Sub),
            "*" | "×" => Some(Op::Mul),
            "/" | "÷" => Some(Op::Div),
            _ => None,
        }
    }

    fn apply(self, a: Rational, b: Rational) -> Result<Rational, Game24Error> {
        match self {
            Op::Add => Ok(a + b),
            Op::Sub => Ok(a - b),
            Op::Mul => Ok(a * b),
            Op::Div => {
                if b.is_zero() {
                    Err(Game24Error::DivisionByZero)
                } else {
                    Ok(a / b)
                }
            }
        }
    }
}

fn remove_one(values: &mut Vec<Rational>, v: Rational) -> bool {
    match values.iter().position(|x| *x == v) {
        Some(i) => {
            values.remove(i);
            true
        }
        None => false,
    }
}

/// Applies one `a op b` step to a state, returning the successor state.
///
/// The expression must be whitespace-separated; a trailing `= result` is
/// tolerated and ignored. Both operands must be present in the remaining
/// multiset (the operand check runs before the zero-divisor check, so
/// dividing by a 0 the table does not hold reports the missing operand).
pub fn game24_apply(state: &Game24State, expression: &str) -> Result<Game24State, Game24Error> {
    let tokens: Vec<&str> = expression
        .split_whitespace()
        .take_while(|t| *t != "=")
        .collect();
    let [a_tok, op_tok, b_tok] = tokens.as_slice() else {
        return Err(Game24Error::MalformedExpression {
            reason: format!("expected `a op b`, got `{expression}`"),
        });
    };
    let a = parse_rational(a_tok).ok_or_else(|| Game24Error::MalformedExpression {
        reason: format!("bad operand `{a_tok}`"),
    })?;
    let b = parse_rational(b_tok).ok_or_else(|| Game24Error::MalformedExpression {
        reason: format!("bad operand `{b_tok}`"),
    })?;
    let op = Op::parse(op_tok).ok_or_else(|| Game24Error::MalformedExpression {
        reason: format!("bad operator `{op_tok}`"),
    })?;

    let mut remaining = state.remaining.clone();
    if !remove_one(&mut remaining, a) {
        return Err(Game24Error::OperandNotAvailable {
            operand: format_rational(a),
        });
    }
    if !remove_one(&mut remaining, b) {
        return Err(Game24Error::OperandNotAvailable {
            operand: format_rational(b),
        });
    }
    let result = op.apply(a, b)?;
    remaining.push(result);
    remaining.sort();

    let mut history = state.history.clone();
    history.push(format!(
        "{} {} {} = {}",
        format_rational(a),
        op.symbol(),
        format_rational(b),
        format_rational(result)
    ));
    Ok(Game24State { remaining, history })
}

/// True iff exactly one number remains and it equals 24 exactly.
pub fn game24_solved(state: &Game24State) -> bool {
    state.remaining.len() == 1 && state.remaining[0] == Rational::from_integer(TARGET)
}

fn brute_force_rec(values: &[(Rational, String)]) -> Option<String> {
    if values.len() == 1 {
        return (values[0].0 == Rational::from_integer(TARGET)).then(|| values[0].1.clone());
    }
    for i in 0..values.len() {
        for j in 0..values.len() {
            if i == j {
                continue;
            }
            let (a, ae) = &values[i];
            let (b, be) = &values[j];
            let rest: Vec<(Rational, String)> = values
                .iter()
                .enumerate()
                .filter(|(idx, _)| *idx != i && *idx != j)
                .map(|(_, v)| v.clone())
                .collect();
            // Commutative ops once per unordered pair; the ordered loop
            // covers both subtraction and division directions.
            let mut candidates: Vec<(Rational, String)> = Vec::new();
            if i < j {
                candidates.push((a + b, format!("({ae} + {be})")));
                candidates.push((a * b, format!("({ae} × {be})")));
            }
            candidates.push((a - b, format!("({ae} − {be})")));
            if !b.is_zero() {
                candidates.push((a / b, format!("({ae} ÷ {be})")));
            }
            for (value, expr) in candidates {
                let mut next = rest.clone();
                next.push((value, expr));
                if let Some(witness) = brute_force_rec(&next) {
                    return Some(witness);
                }
            }
        }
    }
    None
}

/// Exhaustive solvability check over all operand orders, operator choices,
/// and groupings, in exact arithmetic. Returns a witness expression that
/// evaluates to 24 when one exists.
pub fn game24_brute_force(numbers: &[i64; 4]) -> Option<String> {
    let values: Vec<(Rational, String)> = numbers
        .iter()
        .map(|&n| (Rational::from_integer(n), n.to_string()))
        .collect();
    brute_force_rec(&values)
}

/// Deterministically enumerates the legal one-step proposals from a state.
///
/// Canonical order: distinct sorted value pairs (a ≤ b) in ascending order;
/// per pair `a + b`, `b − a`, `a × b`, `b ÷ a`, then the complementary
/// `a − b` and `a ÷ b` when they differ (a ≠ b). The complementary division
/// matters for completeness: 1 5 5 5 is only solvable through 1 ÷ 5.
pub fn game24_enumerate_children(state: &Game24State, k: usize) -> Vec<String> {
    assert!(
        state.remaining.len() >= 2,
        "cannot enumerate proposals with fewer than 2 numbers remaining"
    );
    let mut pairs: Vec<(Rational, Rational)> = Vec::new();
    for i in 0..state.remaining.len() {
        for j in (i + 1)..state.remaining.len() {
            let (a, b) = (state.remaining[i], state.remaining[j]);
            let pair = if a <= b { (a, b) } else { (b, a) };
            if !pairs.contains(&pair) {
                pairs.push(pair);
            }
        }
    }
    pairs.sort();

    let mut out = Vec::new();
    for (a, b) in pairs {
        let (af, bf) = (format_rational(a), format_rational(b));
        out.push(format!("{af} + {bf}"));
        out.push(format!("{bf} − {af}"));
        out.push(format!("{af} × {bf}"));
        if !a.is_zero() {
            out.push(format!("{bf} ÷ {af}"));
        }
        if a != b {
            out.push(format!("{af} − {bf}"));
            if !b.is_zero() {
                out.push(format!("{af} ÷ {bf}"));
            }
        }
    }
    out.truncate(k);
    out
}

/// Parses the puzzle from question text: any runs of digits, which must
/// number exactly four.
pub fn parse_puzzle(text: &str) -> Option<[i64; 4]> {
    let nums: Vec<i64> = text
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse().ok())
        .collect();
    match nums.as_slice() {
        [a, b, c, d] => Some([*a, *b, *c, *d]),
        _ => None,
    }
}

/// Replays a trajectory's Propose actions over the puzzle's start state.
/// Non-Propose nodes (the seed Search, the final Finish) are skipped.
pub fn fold_trajectory(numbers: &[i64], nodes: &[Node]) -> Result<Game24State, Game24Error> {
    let mut state = Game24State::new(numbers);
    for node in nodes {
        if let Action::Propose(expr) = &node.action {
            state = game24_apply(&state, expr)?;
        }
    }
    Ok(state)
}

/// Game-of-24 action environment. Search re-states the puzzle, Propose
/// applies one operation (illegal moves become observations, not errors, so
/// the search can route around them), Finish echoes and terminates.
pub struct Game24Env {
    numbers: [i64; 4],
}

#[derive(Debug, Clone)]
pub struct Game24Session {
    pub state: Game24State,
    pub terminal: bool,
}

impl Game24Env {
    pub fn new(numbers: [i64; 4]) -> Self {
        Game24Env { numbers }
    }

    pub fn from_question(question: &Question) -> Option<Self> {
        parse_puzzle(&question.text).map(Game24Env::new)
    }
}

fn render_remaining(state: &Game24State) -> String {
    let parts: Vec<String> = state.remaining.iter().map(|r| format_rational(*r)).collect();
    parts.join(" ")
}

impl Environment for Game24Env {
    type Session = Game24Session;

    fn new_session(&self) -> Game24Session {
        Game24Session {
            state: Game24State::new(&self.numbers),
            terminal: false,
        }
    }

    fn step(&self, session: &mut Game24Session, action: &Action) -> Result<String, EnvError> {
        Ok(match action {
            Action::Search(_) => format!("Numbers: {}", render_remaining(&session.state)),
            Action::Propose(expr) => match game24_apply(&session.state, expr) {
                Ok(next) => {
                    session.state = next;
                    format!("Remaining: {}", render_remaining(&session.state))
                }
                Err(e) => format!("Invalid move: {e}"),
            },
            Action::Finish(answer) => {
                session.terminal = true;
                answer.clone()
            }
            Action::Lookup(_) => {
                "Invalid action: Lookup is not available in this environment.".to_string()
            }
        })
    }
}

/// Deterministic generator backend: enumerates legal proposals instead of
/// sampling a model, making the search skeleton exactly testable. Emits a
/// Finish draft once a single number remains and it is 24.
pub struct Game24Enumerator;

impl CandidateSource for Game24Enumerator {
    fn generate(
        &self,
        question: &Question,
        _errors: &[ErrorRecord],
        prefix: &[Node],
        _initial_siblings: &[SiblingEntry],
        k: u32,
        _meter: &mut CallMeter,
    ) -> Result<GenerationBatch, GenerationError> {
        let Some(numbers) = parse_puzzle(&question.text) else {
            return Err(GenerationError::AllCandidatesFailed {
                failed_slots: 0,
                duplicates_discarded: 0,
            });
        };
        let state = match fold_trajectory(&numbers, prefix) {
            Ok(s) => s,
            Err(_) => {
                return Err(GenerationError::AllCandidatesFailed {
                    failed_slots: 0,
                    duplicates_discarded: 0,
                })
            }
        };
        let drafts: Vec<NodeDraft> = if state.remaining.len() == 1 {
            if game24_solved(&state) {
                vec![NodeDraft {
                    thought: "All numbers combined into 24; submit the line.".to_string(),
                    action: Action::Finish(state.history.join("; ")),
                }]
            } else {
                // One number left and it is not 24: nothing useful to
                // propose, so the branch dead-ends here.
                Vec::new()
            }
        } else {
            game24_enumerate_children(&state, k as usize)
                .into_iter()
                .map(|expr| NodeDraft {
                    thought: format!("Try {expr}."),
                    action: Action::Propose(expr),
                })
                .collect()
        };
        if drafts.is_empty() {
            return Err(GenerationError::AllCandidatesFailed {
                failed_slots: 0,
                duplicates_discarded: 0,
            });
        }
        Ok(GenerationBatch {
            drafts,
            duplicates_discarded: 0,
            failed_slots: 0,
        })
    }
}

/// Exact answer verification: replays the trajectory's proposals and checks
/// the end state, so only genuinely winning lines are accepted. No model
/// calls are made.
pub struct Game24Judge;

impl AnswerJudge for Game24Judge {
    fn evaluate_answer(
        &self,
        question: &Question,
        _answer: &str,
        trajectory: &[Node],
        _meter: &mut CallMeter,
    ) -> Result<AnswerVerdict, crate::gateway::MeterError> {
        let Some(numbers) = parse_puzzle(&question.text) else {
            return Ok(AnswerVerdict {
                on_topic: false,
                rationale: "question does not contain four numbers".to_string(),
            });
        };
        let verdict = match fold_trajectory(&numbers, trajectory) {
            Ok(state) if game24_solved(&state) => AnswerVerdict {
                on_topic: true,
                rationale: format!("operations reach exactly 24: {}", state.history.join("; ")),
            },
            Ok(state) => AnswerVerdict {
                on_topic: false,
                rationale: format!(
                    "operations leave {} instead of 24",
                    render_remaining(&state)
                ),
            },
            Err(e) => AnswerVerdict {
                on_topic: false,
                rationale: format!("trajectory replays illegally: {e}"),
            },
        };
        Ok(verdict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn apply_removes_operands_and_inserts_result() {
        let s = Game24State::new(&[4, 4, 6, 8]);
        let s = game24_apply(&s, "8 + 4").unwrap();
        assert_eq!(s.remaining, vec![rat(4), rat(6), rat(12)]);
        assert_eq!(s.history, vec!["8 + 4 = 12"]);

        let s = game24_apply(&s, "6 − 4").unwrap();
        assert_eq!(s.remaining, vec![rat(2), rat(12)]);

        let s = game24_apply(&s, "2 × 12").unwrap();
        assert_eq!(s.remaining, vec![rat(24)]);
        assert!(game24_solved(&s));
        assert_eq!(s.history.len(), 3);
    }

    #[test]
    fn ascii_operators_are_accepted() {
        let s = Game24State::new(&[4, 4, 6, 8]);
        let s = game24_apply(&s, "6 - 4").unwrap();
        let s = game24_apply(&s, "8 / 2").unwrap();
        assert_eq!(s.remaining, vec![rat(4), rat(4)]);
        // History is canonicalized to the Unicode operators.
        assert_eq!(s.history, vec!["6 − 4 = 2", "8 ÷ 2 = 4"]);
    }

    #[test]
    fn trailing_equals_result_is_tolerated() {
        let s = Game24State::new(&[4, 4, 6, 8]);
        let s = game24_apply(&s, "8 + 4 = 12").unwrap();
        assert_eq!(s.remaining, vec![rat(4), rat(6), rat(12)]);
    }

    #[test]
    fn missing_operand_beats_division_by_zero() {
        let s = Game24State::new(&[1, 1]);
        assert_eq!(
            game24_apply(&s, "1 ÷ 0"),
            Err(Game24Error::OperandNotAvailable {
                operand: "0".into()
            })
        );
    }

    #[test]
    fn dividing_by_an_actual_zero_is_reported() {
        let s = Game24State::new(&[4, 4]);
        let s = game24_apply(&s, "4 − 4").unwrap();
        let s_with_zero = {
            let mut v = Game24State::new(&[5, 5]);
            v.remaining = vec![rat(0), rat(5)];
            v
        };
        assert_eq!(s.remaining, vec![rat(0)]);
        assert_eq!(
            game24_apply(&s_with_zero, "5 ÷ 0"),
            Err(Game24Error::DivisionByZero)
        );
    }

    #[test]
    fn duplicate_operand_needs_two_copies() {
        let s = Game24State::new(&[4, 6, 8, 9]);
        assert_eq!(
            game24_apply(&s, "4 + 4"),
            Err(Game24Error::OperandNotAvailable {
                operand: "4".into()
            })
        );
    }

    #[test]
    fn malformed_expressions_are_typed() {
        let s = Game24State::new(&[1, 2, 3, 4]);
        assert!(matches!(
            game24_apply(&s, "1 +"),
            Err(Game24Error::MalformedExpression { .. })
        ));
        assert!(matches!(
            game24_apply(&s, "one + two"),
            Err(Game24Error::MalformedExpression { .. })
        ));
        assert!(matches!(
            game24_apply(&s, "1 ? 2"),
            Err(Game24Error::MalformedExpression { .. })
        ));
    }

    #[test]
    fn fractional_operands_round_trip() {
        let mut s = Game24State::new(&[3, 8]);
        s.remaining = vec![Rational::new(8, 3), rat(8)];
        let s = game24_apply(&s, "8 ÷ 8/3").unwrap();
        assert_eq!(s.remaining, vec![rat(3)]);
    }

    #[test]
    fn solved_requires_single_exact_24() {
        let mut s = Game24State::new(&[24, 1, 1, 1]);
        assert!(!game24_solved(&s));
        s.remaining = vec![rat(24)];
        assert!(game24_solved(&s));
        s.remaining = vec![Rational::new(96, 4)];
        assert!(game24_solved(&s));
        s.remaining = vec![Rational::new(95, 4)];
        assert!(!game24_solved(&s));
    }

    #[test]
    fn brute_force_finds_classic_solutions() {
        assert!(game24_brute_force(&[4, 4, 6, 8]).is_some());
        // The fractional classic: 8 ÷ (3 − 8 ÷ 3).
        assert!(game24_brute_force(&[3, 3, 8, 8]).is_some());
        // Needs a small division first: 5 × (5 − 1 ÷ 5).
        assert!(game24_brute_force(&[1, 5, 5, 5]).is_some());
        assert!(game24_brute_force(&[1, 1, 1, 1]).is_none());
        assert!(game24_brute_force(&[1, 1, 1, 2]).is_none());
    }

    #[test]
    fn brute_force_witness_evaluates_to_24() {
        let witness = game24_brute_force(&[3, 3, 8, 8]).unwrap();
        // The witness must actually mention only puzzle numbers and reach 24
        // when replayed through the state machine via its structure. A light
        // check: parse it as nested `(a op b)` and evaluate.
        fn eval(expr: &str) -> Rational {
            let expr = expr.trim();
            if let Ok(n) = expr.parse::<i64>() {
                return Rational::from_integer(n);
            }
            let inner = &expr[1..expr.len() - 1];
            // Find the top-level operator.
            let mut depth = 0;
            for (i, c) in inner.char_indices() {
                match c {
                    '(' => depth += 1,
                    ')' => depth -= 1,
                    '+' | '−' | '×' | '÷' if depth == 0 => {
                        let a = eval(&inner[..i]);
                        let b = eval(&inner[i + c.len_utf8()..]);
                        return match c {
                            '+' => a + b,
                            '−' => a - b,
                            '×' => a * b,
                            _ => a / b,
                        };
                    }
                    _ => {}
                }
            }
            panic!("unparseable witness fragment: {expr}");
        }
        assert_eq!(eval(&witness), rat(24));
    }

    #[test]
    fn enumeration_follows_canonical_order() {
        let s = Game24State::new(&[1, 2]);
        assert_eq!(
            game24_enumerate_children(&s, 3),
            vec!["1 + 2", "2 − 1", "1 × 2"]
        );
        assert_eq!(
            game24_enumerate_children(&s, 100),
            vec!["1 + 2", "2 − 1", "1 × 2", "2 ÷ 1", "1 − 2", "1 ÷ 2"]
        );
    }

    #[test]
    fn enumeration_dedups_symmetric_pairs() {
        let s = Game24State::new(&[4, 4]);
        assert_eq!(
            game24_enumerate_children(&s, 10),
            vec!["4 + 4", "4 − 4", "4 × 4", "4 ÷ 4"]
        );
    }

    #[test]
    fn enumeration_skips_zero_divisors() {
        let mut s = Game24State::new(&[5, 5]);
        s.remaining = vec![rat(0), rat(5)];
        // "5 ÷ 0" is never proposed; "0 ÷ 5" is legal and kept.
        assert_eq!(
            game24_enumerate_children(&s, 10),
            vec!["0 + 5", "5 − 0", "0 × 5", "0 − 5", "0 ÷ 5"]
        );
    }

    #[test]
    #[should_panic(expected = "fewer than 2 numbers")]
    fn enumeration_requires_two_numbers() {
        let mut s = Game24State::new(&[24, 1, 1, 1]);
        s.remaining = vec![rat(24)];
        game24_enumerate_children(&s, 3);
    }

    #[test]
    fn puzzle_parsing_requires_exactly_four_numbers() {
        assert_eq!(parse_puzzle("4 4 6 8"), Some([4, 4, 6, 8]));
        assert_eq!(parse_puzzle("3, 3, 8, 8"), Some([3, 3, 8, 8]));
        assert_eq!(parse_puzzle("1 2 3"), None);
        assert_eq!(parse_puzzle("1 2 3 4 5"), None);
    }

    #[test]
    fn env_translates_illegal_moves_into_observations() {
        let env = Game24Env::new([4, 4, 6, 8]);
        let mut s = env.new_session();
        let obs = env
            .step(&mut s, &Action::Search("4 4 6 8".into()))
            .unwrap();
        assert_eq!(obs, "Numbers: 4 4 6 8");

        let obs = env.step(&mut s, &Action::Propose("8 + 4".into())).unwrap();
        assert_eq!(obs, "Remaining: 4 6 12");

        let obs = env.step(&mut s, &Action::Propose("9 + 9".into())).unwrap();
        assert!(obs.starts_with("Invalid move: operand_not_available"));
        // The failed move left the state untouched.
        assert_eq!(s.state.remaining, vec![rat(4), rat(6), rat(12)]);
    }

    fn puzzle_question(text: &str) -> Question {
        let mut q = Question::new("g1", text);
        q.dataset = crate::types::Dataset::Game24;
        q
    }

    fn propose_node(id: u64, depth: usize, expr: &str) -> Node {
        Node {
            id,
            branch: 0,
            depth,
            parent: Some(id - 1),
            thought: format!("Try {expr}."),
            action: Action::Propose(expr.into()),
            observation: None,
            verdict: None,
        }
    }

    #[test]
    fn enumerator_emits_finish_on_a_won_line() {
        let q = puzzle_question("4 4 6 8");
        let prefix = vec![
            propose_node(1, 1, "8 + 4"),
            propose_node(2, 2, "6 − 4"),
            propose_node(3, 3, "2 × 12"),
        ];
        let mut meter = CallMeter::new(1);
        let batch = Game24Enumerator
            .generate(&q, &[], &prefix, &[], 3, &mut meter)
            .unwrap();
        assert_eq!(batch.drafts.len(), 1);
        assert_eq!(
            batch.drafts[0].action,
            Action::Finish("8 + 4 = 12; 6 − 4 = 2; 2 × 12 = 24".into())
        );
        // The oracle backend spends no model calls.
        assert_eq!(meter.llm_calls, 0);
    }

    #[test]
    fn enumerator_dead_ends_on_a_lost_line() {
        let q = puzzle_question("1 1 1 1");
        let prefix = vec![
            propose_node(1, 1, "1 + 1"),
            propose_node(2, 2, "1 + 1"),
            propose_node(3, 3, "2 + 2"),
        ];
        let mut meter = CallMeter::new(1);
        let err = Game24Enumerator
            .generate(&q, &[], &prefix, &[], 3, &mut meter)
            .unwrap_err();
        assert!(matches!(err, GenerationError::AllCandidatesFailed { .. }));
    }

    #[test]
    fn judge_accepts_only_exact_wins() {
        let q = puzzle_question("4 4 6 8");
        let winning = vec![
            propose_node(1, 1, "8 + 4"),
            propose_node(2, 2, "6 − 4"),
            propose_node(3, 3, "2 × 12"),
        ];
        let mut meter = CallMeter::new(1);
        let v = Game24Judge
            .evaluate_answer(&q, "whatever", &winning, &mut meter)
            .unwrap();
        assert!(v.on_topic);
        assert_eq!(meter.llm_calls, 0);

        let losing = vec![propose_node(1, 1, "8 + 4"), propose_node(2, 2, "6 + 4")];
        let v = Game24Judge
            .evaluate_answer(&q, "whatever", &losing, &mut meter)
            .unwrap();
        assert!(!v.on_topic);
        assert!(v.rationale.contains("instead of 24"));
    }
}
