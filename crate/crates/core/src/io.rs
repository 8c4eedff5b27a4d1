//! Text formats for models and policies.
//!
//! Model documents are line-oriented `key: payload` files; `#` starts a
//! comment. All numbers are rational literals (`a/b`, integers, or decimals,
//! parsed exactly). Parsing then serializing then parsing again yields the
//! same structure.
//!
//! Policy files map history patterns to distributions. Patterns mirror the
//! history shape: observation pairs `private:public`, action names, and for
//! nature assignment literals `{p=1/3, q=1/3}`; `_` matches anything at its
//! position. Agent-first nature patterns end with `@ action`. Histories no
//! pattern matches fall back to the declared default (the first action, or
//! the first vertex of the admissible set), and evaluation reports them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::model::{
    ActionId, AgentObs, NatureObs, PlayOrder, PublicObs, Rpomdp, RpomdpParts, StateId, Stickiness,
};
use crate::num::{format_rational, parse_rational, Q};
use crate::policies::{Distribution, NatureKey, StochasticAgentPolicy, StochasticNaturePolicy};
use crate::trajectories::{extend_supported, initial_supported, AgentHistory, NatureHistory};
use crate::uncertainty::{
    AffineExpr, Assignment, LinearConstraint, Relation, UncertaintySet, VariableId,
};

/// A parse or semantic failure with its position.
#[derive(Debug, Clone, thiserror::Error)]
#[error("line {line}, column {col}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub reason: String,
}

fn err<T>(line: usize, col: usize, reason: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        col,
        reason: reason.into(),
    })
}

const RESERVED: &[char] = &[
    ':', '@', '{', '}', '=', ',', ';', '#', '(', ')', '[', ']', '*', '/',
];

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s != "_"
        && s.chars()
            .all(|c| !c.is_whitespace() && !RESERVED.contains(&c))
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    payload: &'a str,
    payload_col: usize,
}

fn split_lines(text: &str) -> Result<Vec<Line<'_>>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let Some(colon) = content.find(':') else {
            return err(no, 1, "expected `key: payload`");
        };
        let key = content[..colon].trim();
        out.push(Line {
            no,
            key,
            payload: content[colon + 1..].trim(),
            payload_col: colon + 2,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

struct NameTable {
    states: Vec<String>,
    actions: Vec<String>,
    agent_obs: Vec<String>,
    nature_obs: Vec<String>,
    public_obs: Vec<String>,
    vars: Vec<String>,
}

impl NameTable {
    fn state(&self, name: &str, line: usize, col: usize) -> Result<StateId, ParseError> {
        match self.states.iter().position(|s| s == name) {
            Some(i) => Ok(StateId(i)),
            None => err(line, col, format!("unknown state `{name}`")),
        }
    }

    fn action(&self, name: &str, line: usize, col: usize) -> Result<ActionId, ParseError> {
        match self.actions.iter().position(|s| s == name) {
            Some(i) => Ok(ActionId(i)),
            None => err(line, col, format!("unknown action `{name}`")),
        }
    }

    fn var(&self, name: &str, line: usize, col: usize) -> Result<VariableId, ParseError> {
        match self.vars.iter().position(|s| s == name) {
            Some(i) => Ok(VariableId(i)),
            None => err(line, col, format!("unknown variable `{name}`")),
        }
    }
}

/// Parses an affine expression such as `1/2 - q` or `2*p + 1/10`.
fn parse_affine(
    text: &str,
    names: &NameTable,
    line: usize,
    col: usize,
) -> Result<AffineExpr, ParseError> {
    #[derive(Debug, PartialEq)]
    enum Tok {
        Plus,
        Minus,
        Star,
        Num(Q),
        Ident(String),
    }
    let mut toks = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '+' {
            chars.next();
            toks.push((i, Tok::Plus));
        } else if c == '-' {
            chars.next();
            toks.push((i, Tok::Minus));
        } else if c == '*' {
            chars.next();
            toks.push((i, Tok::Star));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_ascii_digit() || d == '.' || d == '/' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            match parse_rational(&text[start..end]) {
                Ok(v) => toks.push((start, Tok::Num(v))),
                Err(e) => return err(line, col + start, e),
            }
        } else {
            let start = i;
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if !d.is_whitespace() && !RESERVED.contains(&d) && d != '+' && d != '-' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            if end == start {
                return err(line, col + start, format!("unexpected character `{c}`"));
            }
            toks.push((start, Tok::Ident(text[start..end].to_string())));
        }
    }
    // terms separated by +/-, each term a product of factors
    let mut constant = Q::zero();
    let mut coeffs: Vec<(VariableId, Q)> = Vec::new();
    let mut k = 0usize;
    let mut sign = Q::one();
    let mut expect_term = true;
    while k < toks.len() {
        match &toks[k].1 {
            Tok::Plus if !expect_term => {
                sign = Q::one();
                expect_term = true;
                k += 1;
            }
            Tok::Minus => {
                if expect_term {
                    sign = -sign;
                } else {
                    sign = -Q::one();
                    expect_term = true;
                }
                k += 1;
            }
            _ if expect_term => {
                let mut coeff = sign.clone();
                let mut var: Option<VariableId> = None;
                loop {
                    match &toks[k].1 {
                        Tok::Num(v) => coeff *= v,
                        Tok::Ident(name) => {
                            if var.is_some() {
                                return err(
                                    line,
                                    col + toks[k].0,
                                    "a term may mention at most one variable",
                                );
                            }
                            var = Some(names.var(name, line, col + toks[k].0)?);
                        }
                        _ => return err(line, col + toks[k].0, "expected a number or variable"),
                    }
                    k += 1;
                    if k < toks.len() && toks[k].1 == Tok::Star {
                        k += 1;
                        if k == toks.len() {
                            return err(line, col + text.len(), "dangling `*`");
                        }
                        continue;
                    }
                    break;
                }
                match var {
                    Some(v) => coeffs.push((v, coeff)),
                    None => constant += coeff,
                }
                sign = Q::one();
                expect_term = false;
            }
            _ => return err(line, col + toks[k].0, "expected `+` or `-`"),
        }
    }
    if expect_term && !toks.is_empty() {
        return err(line, col + text.len(), "expression ends with an operator");
    }
    if toks.is_empty() {
        return err(line, col, "empty expression");
    }
    Ok(AffineExpr::new(constant, coeffs))
}

/// Parses a model document.
pub fn parse_model(text: &str) -> Result<Rpomdp, ParseError> {
    let lines = split_lines(text)?;
    let take_list = |key: &str| -> Option<&Line<'_>> { lines.iter().find(|l| l.key == key) };
    let list_of = |l: &Line<'_>| -> Result<Vec<String>, ParseError> {
        let items: Vec<String> = l
            .payload
            .split_whitespace()
            .map(|s| s.to_string())
            .collect();
        for item in &items {
            if !valid_ident(item) {
                return err(l.no, l.payload_col, format!("invalid name `{item}`"));
            }
        }
        if items.is_empty() {
            return err(l.no, l.payload_col, "empty list");
        }
        Ok(items)
    };

    let states = match take_list("states") {
        Some(l) => list_of(l)?,
        None => return err(1, 1, "missing `states:` line"),
    };
    let actions = match take_list("actions") {
        Some(l) => list_of(l)?,
        None => return err(1, 1, "missing `actions:` line"),
    };
    let agent_obs = match take_list("agent-obs") {
        Some(l) => list_of(l)?,
        None => return err(1, 1, "missing `agent-obs:` line"),
    };
    let nature_obs = match take_list("nature-obs") {
        Some(l) => list_of(l)?,
        None => return err(1, 1, "missing `nature-obs:` line"),
    };
    let public_obs = match take_list("public-obs") {
        Some(l) => list_of(l)?,
        None => return err(1, 1, "missing `public-obs:` line"),
    };

    let mut vars: Vec<String> = Vec::new();
    let mut boxes: Vec<(Q, Q)> = Vec::new();
    for l in lines.iter().filter(|l| l.key == "var") {
        // var: p in [lo, hi]
        let Some((name, rest)) = l.payload.split_once(" in ") else {
            return err(l.no, l.payload_col, "expected `var: name in [lo, hi]`");
        };
        let name = name.trim();
        if !valid_ident(name) {
            return err(l.no, l.payload_col, format!("invalid name `{name}`"));
        }
        let rest = rest.trim();
        if !rest.starts_with('[') || !rest.ends_with(']') {
            return err(l.no, l.payload_col, "expected `[lo, hi]`");
        }
        let inner = &rest[1..rest.len() - 1];
        let Some((lo, hi)) = inner.split_once(',') else {
            return err(l.no, l.payload_col, "expected two comma-separated bounds");
        };
        let lo = parse_rational(lo).map_err(|e| ParseError {
            line: l.no,
            col: l.payload_col,
            reason: e,
        })?;
        let hi = parse_rational(hi).map_err(|e| ParseError {
            line: l.no,
            col: l.payload_col,
            reason: e,
        })?;
        vars.push(name.to_string());
        boxes.push((lo, hi));
    }

    let names = NameTable {
        states,
        actions,
        agent_obs,
        nature_obs,
        public_obs,
        vars,
    };

    let mut couplings = Vec::new();
    for l in lines.iter().filter(|l| l.key == "constraint") {
        let (rel, pos) = if let Some(p) = l.payload.find("<=") {
            (Relation::Le, p)
        } else if let Some(p) = l.payload.find(">=") {
            (Relation::Ge, p)
        } else if let Some(p) = l.payload.find('=') {
            (Relation::Eq, p)
        } else {
            return err(l.no, l.payload_col, "expected `=`, `<=`, or `>=`");
        };
        let lhs = parse_affine(&l.payload[..pos], &names, l.no, l.payload_col)?;
        let width = if rel == Relation::Eq { 1 } else { 2 };
        let rhs_text = &l.payload[pos + width..];
        let rhs = parse_rational(rhs_text).map_err(|e| ParseError {
            line: l.no,
            col: l.payload_col + pos + width,
            reason: e,
        })?;
        couplings.push(LinearConstraint::new(
            lhs.coefficients().map(|(v, c)| (v, c.clone())),
            rel,
            rhs - lhs.constant_part(),
        ));
    }

    let uncertainty =
        UncertaintySet::new(names.vars.clone(), boxes, couplings).map_err(|e| ParseError {
            line: 1,
            col: 1,
            reason: e.to_string(),
        })?;

    let initial_line = take_list("initial").ok_or_else(|| ParseError {
        line: 1,
        col: 1,
        reason: "missing `initial:` line".into(),
    })?;
    let initial_state = names.state(
        initial_line.payload.trim(),
        initial_line.no,
        initial_line.payload_col,
    )?;

    let n_states = names.states.len();
    let n_actions = names.actions.len();
    let mut obs_agent: Vec<Option<AgentObs>> = vec![None; n_states];
    let mut obs_nature: Vec<Option<NatureObs>> = vec![None; n_states];
    let mut obs_public: Vec<Option<PublicObs>> = vec![None; n_states];
    for l in lines.iter().filter(|l| l.key == "observe") {
        // observe: state = za zn zp
        let Some((state, rest)) = l.payload.split_once('=') else {
            return err(l.no, l.payload_col, "expected `observe: state = za zn zp`");
        };
        let s = names.state(state.trim(), l.no, l.payload_col)?;
        let parts: Vec<&str> = rest.split_whitespace().collect();
        if parts.len() != 3 {
            return err(l.no, l.payload_col, "expected three observation labels");
        }
        let find = |labels: &[String], name: &str| labels.iter().position(|x| x == name);
        let za = find(&names.agent_obs, parts[0]).ok_or_else(|| ParseError {
            line: l.no,
            col: l.payload_col,
            reason: format!("unknown agent observation `{}`", parts[0]),
        })?;
        let zn = find(&names.nature_obs, parts[1]).ok_or_else(|| ParseError {
            line: l.no,
            col: l.payload_col,
            reason: format!("unknown nature observation `{}`", parts[1]),
        })?;
        let zp = find(&names.public_obs, parts[2]).ok_or_else(|| ParseError {
            line: l.no,
            col: l.payload_col,
            reason: format!("unknown public observation `{}`", parts[2]),
        })?;
        obs_agent[s.0] = Some(AgentObs(za));
        obs_nature[s.0] = Some(NatureObs(zn));
        obs_public[s.0] = Some(PublicObs(zp));
    }
    for (i, slot) in obs_agent.iter().enumerate() {
        if slot.is_none() {
            return err(
                1,
                1,
                format!(
                    "missing observation map entry for state `{}`",
                    names.states[i]
                ),
            );
        }
    }

    let mut rewards = vec![vec![Q::zero(); n_actions]; n_states];
    for l in lines.iter().filter(|l| l.key == "reward") {
        let Some((head, value)) = l.payload.split_once('=') else {
            return err(
                l.no,
                l.payload_col,
                "expected `reward: state action = value`",
            );
        };
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 2 {
            return err(l.no, l.payload_col, "expected `state action`");
        }
        let s = names.state(parts[0], l.no, l.payload_col)?;
        let value = parse_rational(value).map_err(|e| ParseError {
            line: l.no,
            col: l.payload_col,
            reason: e,
        })?;
        if parts[1] == "*" {
            for slot in rewards[s.0].iter_mut() {
                *slot = value.clone();
            }
        } else {
            let a = names.action(parts[1], l.no, l.payload_col)?;
            rewards[s.0][a.0] = value;
        }
    }

    let mut transitions = vec![vec![vec![AffineExpr::zero(); n_states]; n_actions]; n_states];
    for l in lines.iter().filter(|l| l.key == "transition") {
        let Some((head, expr_text)) = l.payload.split_once('=') else {
            return err(
                l.no,
                l.payload_col,
                "expected `transition: state action next = expr`",
            );
        };
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 3 {
            return err(l.no, l.payload_col, "expected `state action next`");
        }
        let s = names.state(parts[0], l.no, l.payload_col)?;
        let next = names.state(parts[2], l.no, l.payload_col)?;
        let expr = parse_affine(expr_text, &names, l.no, l.payload_col)?;
        if parts[1] == "*" {
            for per_action in transitions[s.0].iter_mut() {
                per_action[next.0] = expr.clone();
            }
        } else {
            let a = names.action(parts[1], l.no, l.payload_col)?;
            transitions[s.0][a.0][next.0] = expr;
        }
    }

    let sticky_line = take_list("stickiness").ok_or_else(|| ParseError {
        line: 1,
        col: 1,
        reason: "missing `stickiness:` line".into(),
    })?;
    let stickiness = match sticky_line.payload.trim() {
        "zero" => Stickiness::Zero,
        "full" => Stickiness::Full,
        "observation-based" => {
            let mut influence: BTreeMap<
                VariableId,
                std::collections::BTreeSet<(StateId, ActionId)>,
            > = BTreeMap::new();
            for l in lines.iter().filter(|l| l.key == "influence") {
                // influence: v = (s a) (s a) ...
                let Some((var, rest)) = l.payload.split_once('=') else {
                    return err(l.no, l.payload_col, "expected `influence: var = (s a) ...`");
                };
                let v = names.var(var.trim(), l.no, l.payload_col)?;
                let entry = influence.entry(v).or_default();
                for group in rest.split(')') {
                    let group = group.trim();
                    if group.is_empty() {
                        continue;
                    }
                    let Some(stripped) = group.strip_prefix('(') else {
                        return err(l.no, l.payload_col, "expected `(state action)` groups");
                    };
                    let parts: Vec<&str> = stripped.split_whitespace().collect();
                    if parts.len() != 2 {
                        return err(l.no, l.payload_col, "expected `(state action)`");
                    }
                    entry.insert((
                        names.state(parts[0], l.no, l.payload_col)?,
                        names.action(parts[1], l.no, l.payload_col)?,
                    ));
                }
            }
            Stickiness::ObservationBased { influence }
        }
        "custom" => {
            let mut table = BTreeMap::new();
            for l in lines.iter().filter(|l| l.key == "stick-entry") {
                // stick-entry: v zn zp a = 0|1
                let Some((head, value)) = l.payload.split_once('=') else {
                    return err(
                        l.no,
                        l.payload_col,
                        "expected `stick-entry: v zn zp a = 0|1`",
                    );
                };
                let parts: Vec<&str> = head.split_whitespace().collect();
                if parts.len() != 4 {
                    return err(l.no, l.payload_col, "expected `v zn zp a`");
                }
                let v = names.var(parts[0], l.no, l.payload_col)?;
                let zn = names
                    .nature_obs
                    .iter()
                    .position(|x| x == parts[1])
                    .ok_or_else(|| ParseError {
                        line: l.no,
                        col: l.payload_col,
                        reason: format!("unknown nature observation `{}`", parts[1]),
                    })?;
                let zp = names
                    .public_obs
                    .iter()
                    .position(|x| x == parts[2])
                    .ok_or_else(|| ParseError {
                        line: l.no,
                        col: l.payload_col,
                        reason: format!("unknown public observation `{}`", parts[2]),
                    })?;
                let a = names.action(parts[3], l.no, l.payload_col)?;
                let flag = match value.trim() {
                    "0" => false,
                    "1" => true,
                    other => {
                        return err(
                            l.no,
                            l.payload_col,
                            format!("expected 0 or 1, got `{other}`"),
                        )
                    }
                };
                table.insert((v, NatureObs(zn), PublicObs(zp), a), flag);
            }
            Stickiness::Custom { table }
        }
        other => {
            return err(
                sticky_line.no,
                sticky_line.payload_col,
                format!("unknown stickiness `{other}`"),
            )
        }
    };

    let order_line = take_list("play-order").ok_or_else(|| ParseError {
        line: 1,
        col: 1,
        reason: "missing `play-order:` line".into(),
    })?;
    let play_order = match order_line.payload.trim() {
        "agent-first" => PlayOrder::AgentFirst,
        "nature-first" => PlayOrder::NatureFirst,
        other => {
            return err(
                order_line.no,
                order_line.payload_col,
                format!("unknown play order `{other}`"),
            )
        }
    };

    Rpomdp::new(RpomdpParts {
        states: names.states,
        actions: names.actions,
        agent_obs_labels: names.agent_obs,
        nature_obs_labels: names.nature_obs,
        public_obs_labels: names.public_obs,
        initial_state,
        obs_agent: obs_agent.into_iter().map(|o| o.expect("checked")).collect(),
        obs_nature: obs_nature
            .into_iter()
            .map(|o| o.expect("checked"))
            .collect(),
        obs_public: obs_public
            .into_iter()
            .map(|o| o.expect("checked"))
            .collect(),
        rewards,
        transitions,
        uncertainty,
        stickiness,
        play_order,
    })
    .map_err(|e| ParseError {
        line: 1,
        col: 1,
        reason: e.to_string(),
    })
}

fn format_affine(model: &Rpomdp, expr: &AffineExpr) -> String {
    let mut out = String::new();
    let mut wrote = false;
    if !expr.constant_part().is_zero() || expr.is_constant() {
        out.push_str(&format_rational(expr.constant_part()));
        wrote = true;
    }
    for (v, c) in expr.coefficients() {
        if wrote {
            out.push_str(if c.is_negative() { " - " } else { " + " });
        } else if c.is_negative() {
            out.push('-');
        }
        let mag = c.abs();
        if !mag.is_one() {
            out.push_str(&format_rational(&mag));
            out.push('*');
        }
        out.push_str(model.uncertainty().variable_name(v));
        wrote = true;
    }
    out
}

/// Serializes a model to the document format; `parse_model` inverts it.
pub fn serialize_model(model: &Rpomdp) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "states: {}", model_names(model));
    let _ = writeln!(
        out,
        "actions: {}",
        model
            .actions()
            .map(|a| model.action_name(a))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(out, "agent-obs: {}", model.agent_obs_labels().join(" "));
    let _ = writeln!(out, "nature-obs: {}", model.nature_obs_labels().join(" "));
    let _ = writeln!(out, "public-obs: {}", model.public_obs_labels().join(" "));
    let _ = writeln!(out, "initial: {}", model.state_name(model.initial_state()));
    for s in model.states() {
        let _ = writeln!(
            out,
            "observe: {} = {} {} {}",
            model.state_name(s),
            model.agent_obs_label(model.agent_obs(s)),
            model.nature_obs_label(model.nature_obs(s)),
            model.public_obs_label(model.public_obs(s)),
        );
    }
    for v in model.uncertainty().variables() {
        let (lo, hi) = model.uncertainty().bounds(v);
        let _ = writeln!(
            out,
            "var: {} in [{}, {}]",
            model.uncertainty().variable_name(v),
            format_rational(lo),
            format_rational(hi)
        );
    }
    for c in model.uncertainty().couplings() {
        let lhs = AffineExpr::new(Q::zero(), c.terms.iter().map(|(v, q)| (*v, q.clone())));
        let rel = match c.rel {
            Relation::Eq => "=",
            Relation::Le => "<=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(
            out,
            "constraint: {} {} {}",
            format_affine(model, &lhs),
            rel,
            format_rational(&c.rhs)
        );
    }
    for s in model.states() {
        for a in model.actions() {
            if !model.reward(s, a).is_zero() {
                let _ = writeln!(
                    out,
                    "reward: {} {} = {}",
                    model.state_name(s),
                    model.action_name(a),
                    format_rational(model.reward(s, a))
                );
            }
        }
    }
    for s in model.states() {
        for a in model.actions() {
            for next in model.states() {
                let expr = model.transition(s, a, next);
                if !expr.is_zero() {
                    let _ = writeln!(
                        out,
                        "transition: {} {} {} = {}",
                        model.state_name(s),
                        model.action_name(a),
                        model.state_name(next),
                        format_affine(model, expr)
                    );
                }
            }
        }
    }
    match model.stickiness() {
        Stickiness::Zero => {
            let _ = writeln!(out, "stickiness: zero");
        }
        Stickiness::Full => {
            let _ = writeln!(out, "stickiness: full");
        }
        Stickiness::ObservationBased { influence } => {
            let _ = writeln!(out, "stickiness: observation-based");
            for (v, pairs) in influence {
                let body = pairs
                    .iter()
                    .map(|(s, a)| format!("({} {})", model.state_name(*s), model.action_name(*a)))
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(
                    out,
                    "influence: {} = {}",
                    model.uncertainty().variable_name(*v),
                    body
                );
            }
        }
        Stickiness::Custom { table } => {
            let _ = writeln!(out, "stickiness: custom");
            for ((v, zn, zp, a), flag) in table {
                let _ = writeln!(
                    out,
                    "stick-entry: {} {} {} {} = {}",
                    model.uncertainty().variable_name(*v),
                    model.nature_obs_label(*zn),
                    model.public_obs_label(*zp),
                    model.action_name(*a),
                    if *flag { 1 } else { 0 }
                );
            }
        }
    }
    let _ = writeln!(out, "play-order: {}", model.play_order());
    out
}

fn model_names(model: &Rpomdp) -> String {
    model
        .states()
        .map(|s| model.state_name(s))
        .collect::<Vec<_>>()
        .join(" ")
}

// ---------------------------------------------------------------------------
// Policy files
// ---------------------------------------------------------------------------

/// A pattern slot: match anything or one concrete value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot<T> {
    Any,
    Is(T),
}

impl<T: PartialEq> Slot<T> {
    fn matches(&self, x: &T) -> bool {
        match self {
            Slot::Any => true,
            Slot::Is(v) => v == x,
        }
    }
}

/// One step of an agent pattern: action, then the next observation pair.
pub type AgentStepPattern = (Slot<ActionId>, (Slot<AgentObs>, Slot<PublicObs>));

#[derive(Debug, Clone)]
pub struct AgentRule {
    pub init: (Slot<AgentObs>, Slot<PublicObs>),
    pub steps: Vec<AgentStepPattern>,
    pub dist: Distribution<ActionId>,
}

/// One step of a nature pattern: action, assignment, next observation pair.
pub type NatureStepPattern = (
    Slot<ActionId>,
    Slot<Assignment>,
    (Slot<NatureObs>, Slot<PublicObs>),
);

#[derive(Debug, Clone)]
pub struct NatureRule {
    pub init: (Slot<NatureObs>, Slot<PublicObs>),
    pub steps: Vec<NatureStepPattern>,
    /// Agent-first rules may constrain the observed action.
    pub action: Option<Slot<ActionId>>,
    pub dist: Distribution<Assignment>,
}

/// A parsed policy file: one side's pattern rules.
#[derive(Debug, Clone)]
pub enum PolicyDocument {
    Agent(Vec<AgentRule>),
    Nature(Vec<NatureRule>),
}

fn parse_obs_pair<A, B>(
    token: &str,
    a_labels: &[String],
    b_labels: &[String],
    mk_a: impl Fn(usize) -> A,
    mk_b: impl Fn(usize) -> B,
    line: usize,
    col: usize,
) -> Result<(Slot<A>, Slot<B>), ParseError> {
    if token == "_" {
        return Ok((Slot::Any, Slot::Any));
    }
    let Some((a, b)) = token.split_once(':') else {
        return err(
            line,
            col,
            format!("expected `private:public`, got `{token}`"),
        );
    };
    let slot_a = if a == "_" {
        Slot::Any
    } else {
        match a_labels.iter().position(|x| x == a) {
            Some(i) => Slot::Is(mk_a(i)),
            None => return err(line, col, format!("unknown observation `{a}`")),
        }
    };
    let slot_b = if b == "_" {
        Slot::Any
    } else {
        match b_labels.iter().position(|x| x == b) {
            Some(i) => Slot::Is(mk_b(i)),
            None => return err(line, col, format!("unknown observation `{b}`")),
        }
    };
    Ok((slot_a, slot_b))
}

fn parse_assignment_literal(
    model: &Rpomdp,
    text: &str,
    line: usize,
    col: usize,
) -> Result<Assignment, ParseError> {
    let trimmed = text.trim();
    if !trimmed.starts_with('{') || !trimmed.ends_with('}') {
        return err(line, col, "expected `{var=value, ...}`");
    }
    let inner = &trimmed[1..trimmed.len() - 1];
    let mut values: Vec<Option<Q>> = vec![None; model.uncertainty().arity()];
    if !inner.trim().is_empty() {
        for part in inner.split(',') {
            let Some((name, value)) = part.split_once('=') else {
                return err(line, col, "expected `var=value` entries");
            };
            let v = model
                .uncertainty()
                .variable(name.trim())
                .ok_or_else(|| ParseError {
                    line,
                    col,
                    reason: format!("unknown variable `{}`", name.trim()),
                })?;
            let value = parse_rational(value).map_err(|e| ParseError {
                line,
                col,
                reason: e,
            })?;
            values[v.0] = Some(value);
        }
    }
    let mut out = Vec::with_capacity(values.len());
    for (i, v) in values.into_iter().enumerate() {
        match v {
            Some(x) => out.push(x),
            None => {
                return err(
                    line,
                    col,
                    format!(
                        "assignment misses variable `{}`",
                        model.uncertainty().variable_name(VariableId(i))
                    ),
                )
            }
        }
    }
    Ok(Assignment::new(out))
}

fn format_assignment(model: &Rpomdp, u: &Assignment) -> String {
    let parts: Vec<String> = model
        .uncertainty()
        .variables()
        .map(|v| {
            format!(
                "{}={}",
                model.uncertainty().variable_name(v),
                format_rational(u.get(v))
            )
        })
        .collect();
    format!("{{{}}}", parts.join(", "))
}

/// Parses a policy file against a model.
pub fn parse_policy(model: &Rpomdp, text: &str) -> Result<PolicyDocument, ParseError> {
    let lines = split_lines(text)?;
    let kind_line = lines
        .iter()
        .find(|l| l.key == "policy")
        .ok_or_else(|| ParseError {
            line: 1,
            col: 1,
            reason: "missing `policy:` line".into(),
        })?;
    let is_agent = match kind_line.payload.trim() {
        "agent" => true,
        "nature" => false,
        other => {
            return err(
                kind_line.no,
                kind_line.payload_col,
                format!("unknown policy side `{other}`"),
            )
        }
    };
    let action_slot = |tok: &str, line: usize, col: usize| -> Result<Slot<ActionId>, ParseError> {
        if tok == "_" {
            Ok(Slot::Any)
        } else {
            match model.action(tok) {
                Ok(a) => Ok(Slot::Is(a)),
                Err(_) => err(line, col, format!("unknown action `{tok}`")),
            }
        }
    };

    if is_agent {
        let mut rules = Vec::new();
        for l in lines.iter().filter(|l| l.key == "map") {
            let Some((pattern, dist_text)) = l.payload.split_once("->") else {
                return err(l.no, l.payload_col, "expected `pattern -> distribution`");
            };
            let toks: Vec<&str> = pattern.split_whitespace().collect();
            if toks.is_empty() || toks.len().is_multiple_of(2) {
                return err(
                    l.no,
                    l.payload_col,
                    "agent patterns alternate observation and action tokens",
                );
            }
            let init = parse_obs_pair(
                toks[0],
                model.agent_obs_labels(),
                model.public_obs_labels(),
                AgentObs,
                PublicObs,
                l.no,
                l.payload_col,
            )?;
            let mut steps = Vec::new();
            let mut k = 1;
            while k < toks.len() {
                let act = action_slot(toks[k], l.no, l.payload_col)?;
                let obs = parse_obs_pair(
                    toks[k + 1],
                    model.agent_obs_labels(),
                    model.public_obs_labels(),
                    AgentObs,
                    PublicObs,
                    l.no,
                    l.payload_col,
                )?;
                steps.push((act, obs));
                k += 2;
            }
            let mut entries = Vec::new();
            for part in dist_text.split(';') {
                let Some((target, prob)) = part.rsplit_once(':') else {
                    return err(l.no, l.payload_col, "expected `action: prob` entries");
                };
                let a = model.action(target.trim()).map_err(|e| ParseError {
                    line: l.no,
                    col: l.payload_col,
                    reason: e.to_string(),
                })?;
                let p = parse_rational(prob).map_err(|e| ParseError {
                    line: l.no,
                    col: l.payload_col,
                    reason: e,
                })?;
                entries.push((a, p));
            }
            let dist = Distribution::new(entries).map_err(|e| ParseError {
                line: l.no,
                col: l.payload_col,
                reason: e.to_string(),
            })?;
            rules.push(AgentRule { init, steps, dist });
        }
        Ok(PolicyDocument::Agent(rules))
    } else {
        let mut rules = Vec::new();
        for l in lines.iter().filter(|l| l.key == "map") {
            let Some((pattern, dist_text)) = l.payload.split_once("->") else {
                return err(l.no, l.payload_col, "expected `pattern -> distribution`");
            };
            let (history_part, action_part) = match pattern.split_once('@') {
                Some((h, a)) => (h, Some(a.trim())),
                None => (pattern, None),
            };
            // Tokenize, keeping `{...}` literals whole.
            let mut toks: Vec<String> = Vec::new();
            let mut depth = 0usize;
            let mut cur = String::new();
            for c in history_part.chars() {
                match c {
                    '{' => {
                        depth += 1;
                        cur.push(c);
                    }
                    '}' => {
                        depth = depth.saturating_sub(1);
                        cur.push(c);
                    }
                    c if c.is_whitespace() && depth == 0 => {
                        if !cur.is_empty() {
                            toks.push(std::mem::take(&mut cur));
                        }
                    }
                    c => cur.push(c),
                }
            }
            if !cur.is_empty() {
                toks.push(cur);
            }
            if toks.is_empty() || toks.len() % 3 != 1 {
                return err(
                    l.no,
                    l.payload_col,
                    "nature patterns read `obs (action assignment obs)*`",
                );
            }
            let init = parse_obs_pair(
                &toks[0],
                model.nature_obs_labels(),
                model.public_obs_labels(),
                NatureObs,
                PublicObs,
                l.no,
                l.payload_col,
            )?;
            let mut steps = Vec::new();
            let mut k = 1;
            while k < toks.len() {
                let act = action_slot(&toks[k], l.no, l.payload_col)?;
                let asg = if toks[k + 1] == "_" {
                    Slot::Any
                } else {
                    Slot::Is(parse_assignment_literal(
                        model,
                        &toks[k + 1],
                        l.no,
                        l.payload_col,
                    )?)
                };
                let obs = parse_obs_pair(
                    &toks[k + 2],
                    model.nature_obs_labels(),
                    model.public_obs_labels(),
                    NatureObs,
                    PublicObs,
                    l.no,
                    l.payload_col,
                )?;
                steps.push((act, asg, obs));
                k += 3;
            }
            let action = match action_part {
                Some(tok) => Some(action_slot(tok, l.no, l.payload_col)?),
                None => None,
            };
            let mut entries = Vec::new();
            for part in dist_text.split(';') {
                let Some((target, prob)) = part.rsplit_once(':') else {
                    return err(l.no, l.payload_col, "expected `{assignment}: prob` entries");
                };
                let u = parse_assignment_literal(model, target, l.no, l.payload_col)?;
                let p = parse_rational(prob).map_err(|e| ParseError {
                    line: l.no,
                    col: l.payload_col,
                    reason: e,
                })?;
                entries.push((u, p));
            }
            let dist = Distribution::new(entries).map_err(|e| ParseError {
                line: l.no,
                col: l.payload_col,
                reason: e.to_string(),
            })?;
            rules.push(NatureRule {
                init,
                steps,
                action,
                dist,
            });
        }
        Ok(PolicyDocument::Nature(rules))
    }
}

fn agent_rule_matches(rule: &AgentRule, h: &AgentHistory) -> bool {
    if rule.steps.len() != h.steps.len() {
        return false;
    }
    if !rule.init.0.matches(&h.initial.0) || !rule.init.1.matches(&h.initial.1) {
        return false;
    }
    rule.steps
        .iter()
        .zip(&h.steps)
        .all(|(pat, (a, z))| pat.0.matches(a) && pat.1 .0.matches(&z.0) && pat.1 .1.matches(&z.1))
}

fn nature_rule_matches(rule: &NatureRule, h: &NatureHistory, a: ActionId, mode: PlayOrder) -> bool {
    if rule.steps.len() != h.steps.len() {
        return false;
    }
    if !rule.init.0.matches(&h.initial.0) || !rule.init.1.matches(&h.initial.1) {
        return false;
    }
    let history_ok = rule.steps.iter().zip(&h.steps).all(|(pat, (act, u, z))| {
        pat.0.matches(act) && pat.1.matches(u) && pat.2 .0.matches(&z.0) && pat.2 .1.matches(&z.1)
    });
    if !history_ok {
        return false;
    }
    match (mode, &rule.action) {
        (PlayOrder::AgentFirst, Some(slot)) => slot.matches(&a),
        (PlayOrder::AgentFirst, None) => true,
        (PlayOrder::NatureFirst, _) => true,
    }
}

/// Instantiates agent pattern rules into a concrete policy table over the
/// histories reachable up to `horizon`. Returns the policy and rendered
/// descriptions of reachable histories that fell back to the default.
pub fn instantiate_agent_policy(
    model: &Rpomdp,
    rules: &[AgentRule],
    horizon: usize,
) -> (StochasticAgentPolicy, Vec<String>) {
    let vertices = model.uncertainty().vertices();
    let mut table = BTreeMap::new();
    let mut fallbacks = std::collections::BTreeSet::new();
    type Frontier = Vec<(AgentHistory, std::collections::BTreeSet<StateId>)>;
    let mut frontier: Frontier = vec![(
        AgentHistory {
            initial: (
                model.agent_obs(model.initial_state()),
                model.public_obs(model.initial_state()),
            ),
            steps: Vec::new(),
        },
        std::iter::once(model.initial_state()).collect(),
    )];
    for _ in 0..horizon {
        let mut next_frontier: Frontier = Vec::new();
        for (h, support) in &frontier {
            let rule = rules.iter().find(|r| agent_rule_matches(r, h));
            let actions: Vec<ActionId> = match rule {
                Some(r) => {
                    table.insert(h.clone(), r.dist.clone());
                    r.dist.support().copied().collect()
                }
                None => {
                    fallbacks.insert(render_agent_history(model, h));
                    vec![ActionId(0)]
                }
            };
            for a in actions {
                let mut by_obs: BTreeMap<
                    (AgentObs, PublicObs),
                    std::collections::BTreeSet<StateId>,
                > = BTreeMap::new();
                for &s in support {
                    for next in model.states() {
                        let expr = model.transition(s, a, next);
                        let reachable = if expr.is_constant() {
                            expr.constant_part() > &Q::zero()
                        } else {
                            vertices.iter().any(|u| expr.eval(u) > Q::zero())
                        };
                        if reachable {
                            by_obs
                                .entry((model.agent_obs(next), model.public_obs(next)))
                                .or_default()
                                .insert(next);
                        }
                    }
                }
                for (z, sup) in by_obs {
                    let mut h2 = h.clone();
                    h2.steps.push((a, z));
                    next_frontier.push((h2, sup));
                }
            }
        }
        next_frontier.sort_by(|x, y| x.0.cmp(&y.0));
        next_frontier.dedup_by(|x, y| x.0 == y.0 && x.1 == y.1);
        frontier = next_frontier;
    }
    (
        StochasticAgentPolicy::new(table),
        fallbacks.into_iter().collect(),
    )
}

/// Instantiates nature pattern rules into a concrete policy table over the
/// keys reachable up to `horizon` under the rules' own choices. Returns the
/// policy and rendered descriptions of keys that fell back to the default.
pub fn instantiate_nature_policy(
    model: &Rpomdp,
    rules: &[NatureRule],
    horizon: usize,
) -> Result<(StochasticNaturePolicy, Vec<String>), Error> {
    let mode = model.play_order();
    let mut table: BTreeMap<NatureKey, Distribution<Assignment>> = BTreeMap::new();
    let mut fallbacks = std::collections::BTreeSet::new();
    let mut frontier = vec![initial_supported(model)];
    for _ in 0..horizon {
        let mut next_frontier = Vec::new();
        for node in &frontier {
            let h_n = node.history.nature_part();
            for a in model.actions() {
                let rule = rules.iter().find(|r| nature_rule_matches(r, &h_n, a, mode));
                let dist = match rule {
                    Some(r) => {
                        for (u, _) in r.dist.iter() {
                            if !u.agrees(&node.fixed) || !model.uncertainty().contains(u) {
                                return Err(Error::InvalidChoice);
                            }
                        }
                        table.insert(NatureKey::for_mode(mode, h_n.clone(), a), r.dist.clone());
                        r.dist.clone()
                    }
                    None => {
                        fallbacks.insert(render_nature_key(model, &h_n, a));
                        Distribution::dirac(
                            model.uncertainty().constrain(&node.fixed)?.first_vertex()?,
                        )
                    }
                };
                for (u, _) in dist.iter() {
                    next_frontier.extend(extend_supported(model, node, a, u));
                }
            }
        }
        next_frontier.sort_by(|x, y| x.history.cmp(&y.history));
        next_frontier.dedup_by(|x, y| x.history == y.history && x.support == y.support);
        frontier = next_frontier;
    }
    Ok((
        StochasticNaturePolicy::new(mode, table),
        fallbacks.into_iter().collect(),
    ))
}

fn render_agent_history(model: &Rpomdp, h: &AgentHistory) -> String {
    let mut out = format!(
        "{}:{}",
        model.agent_obs_label(h.initial.0),
        model.public_obs_label(h.initial.1)
    );
    for (a, z) in &h.steps {
        out.push_str(&format!(
            " {} {}:{}",
            model.action_name(*a),
            model.agent_obs_label(z.0),
            model.public_obs_label(z.1)
        ));
    }
    out
}

fn render_nature_key(model: &Rpomdp, h: &NatureHistory, a: ActionId) -> String {
    let mut out = format!(
        "{}:{}",
        model.nature_obs_label(h.initial.0),
        model.public_obs_label(h.initial.1)
    );
    for (act, u, z) in &h.steps {
        out.push_str(&format!(
            " {} {} {}:{}",
            model.action_name(*act),
            format_assignment(model, u),
            model.nature_obs_label(z.0),
            model.public_obs_label(z.1)
        ));
    }
    if model.play_order() == PlayOrder::AgentFirst {
        out.push_str(&format!(" @ {}", model.action_name(a)));
    }
    out
}

/// Serializes a concrete agent policy table as exact-match rules.
pub fn serialize_agent_policy(model: &Rpomdp, pi: &StochasticAgentPolicy) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("policy: agent\n");
    for (h, dist) in &pi.table {
        let entries: Vec<String> = dist
            .iter()
            .map(|(a, p)| format!("{}: {}", model.action_name(*a), format_rational(p)))
            .collect();
        let _ = writeln!(
            out,
            "map: {} -> {}",
            render_agent_history(model, h),
            entries.join("; ")
        );
    }
    out
}

/// Serializes a concrete nature policy table as exact-match rules.
pub fn serialize_nature_policy(model: &Rpomdp, theta: &StochasticNaturePolicy) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("policy: nature\n");
    for (key, dist) in &theta.table {
        let entries: Vec<String> = dist
            .iter()
            .map(|(u, p)| format!("{}: {}", format_assignment(model, u), format_rational(p)))
            .collect();
        let rendered = match key.action {
            Some(a) => render_nature_key(model, &key.history, a),
            None => render_nature_key(model, &key.history, ActionId(0)),
        };
        let _ = writeln!(out, "map: {} -> {}", rendered, entries.join("; "));
    }
    out
}

impl fmt::Display for PolicyDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyDocument::Agent(rules) => write!(f, "agent policy ({} rules)", rules.len()),
            PolicyDocument::Nature(rules) => write!(f, "nature policy ({} rules)", rules.len()),
        }
    }
}


#[cfg(test)]
mod plain_pomdp_tests {
    use super::*;
    use crate::num::q_int;
    use crate::policies::{AgentPolicy, NaturePolicy};

    const PLAIN: &str = "\
states: s0 win done
actions: go stay
agent-obs: none
nature-obs: none
public-obs: start end
initial: s0
observe: s0 = none none start
observe: win = none none end
observe: done = none none end
reward: win * = 10
transition: s0 go win = 1/2
transition: s0 go done = 1/2
transition: s0 stay done = 1
transition: win * done = 1
transition: done * done = 1
stickiness: zero
play-order: agent-first
";

    #[test]
    fn variable_free_models_are_plain_pomdps() {
        // No variables at all: nature has a single trivial move everywhere
        // and the solver reduces to plain finite-horizon optimization.
        let model = parse_model(PLAIN).unwrap();
        assert_eq!(model.uncertainty().arity(), 0);
        assert!(model.validate().is_valid());
        let value = crate::evaluation::value_fh(
            &model,
            &AgentPolicy::first_action(),
            &NaturePolicy::first_vertex_everywhere(&model),
            2,
        )
        .unwrap();
        assert_eq!(value, q_int(5));
        let result =
            crate::solver::solve_saddle(&model, 2, &crate::solver::SolverConfig::default())
                .unwrap();
        assert_eq!(result.lower_value, q_int(5));
        assert_eq!(result.gap, q_int(0));
        // Round trip survives the absence of variables.
        let doc = serialize_model(&model);
        assert_eq!(parse_model(&doc).unwrap(), model);
    }
}
