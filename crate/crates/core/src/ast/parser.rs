use super::lexer::{lex, Tok, TokKind};
use super::AstError;

/// What a tree node stands for in the source statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Keyword,
    Operator,
    Identifier,
    Literal,
    Function,
    Star,
}

/// One node of the parse tree: a lower-cased surface label plus children in
/// source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlNode {
    pub label: String,
    pub kind: NodeKind,
    pub children: Vec<SqlNode>,
}

impl SqlNode {
    fn new(label: impl Into<String>, kind: NodeKind) -> Self {
        SqlNode {
            label: label.into(),
            kind,
            children: Vec::new(),
        }
    }

    fn with_children(label: impl Into<String>, kind: NodeKind, children: Vec<SqlNode>) -> Self {
        SqlNode {
            label: label.into(),
            kind,
            children,
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(SqlNode::node_count).sum::<usize>()
    }

    /// Table/column identifiers appearing anywhere in the tree, lower-cased,
    /// with qualified names split on `.`.
    pub fn identifiers(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers(&self, out: &mut std::collections::BTreeSet<String>) {
        if self.kind == NodeKind::Identifier {
            for part in self.label.split('.') {
                if !part.is_empty() && part != "*" {
                    out.insert(part.to_string());
                }
            }
        }
        for child in &self.children {
            child.collect_identifiers(out);
        }
    }
}

/// Words that cannot serve as a bare table alias.
const RESERVED: [&str; 38] = [
    "select", "from", "where", "group", "by", "having", "order", "limit", "offset", "union",
    "intersect", "except", "join", "inner", "left", "right", "full", "outer", "cross", "on", "as",
    "and", "or", "not", "in", "like", "between", "is", "null", "exists", "distinct", "case",
    "when", "then", "else", "end", "asc", "desc",
];

pub fn parse_tree(sql: &str) -> Result<SqlNode, AstError> {
    let toks = lex(sql)?;
    let mut p = Parser { toks, at: 0 };
    let root = p.query()?;
    if p.eat_sym(";") && !p.done() {
        return Err(AstError::MultiStatementError);
    }
    if !p.done() {
        return Err(p.err("trailing input after statement"));
    }
    Ok(root)
}

struct Parser {
    toks: Vec<Tok>,
    at: usize,
}

impl Parser {
    fn done(&self) -> bool {
        self.at >= self.toks.len()
    }

    fn peek(&self) -> Option<&TokKind> {
        self.toks.get(self.at).map(|t| &t.kind)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.at)
            .or_else(|| self.toks.last())
            .map(|t| t.pos)
            .unwrap_or(0)
    }

    fn err(&self, message: impl Into<String>) -> AstError {
        AstError::ParseError {
            position: self.pos(),
            message: message.into(),
        }
    }

    fn bump(&mut self) -> Option<TokKind> {
        let t = self.toks.get(self.at).map(|t| t.kind.clone());
        self.at += 1;
        t
    }

    /// Case-insensitive keyword lookahead.
    fn peek_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(TokKind::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn peek_kw_at(&self, offset: usize, kw: &str) -> bool {
        matches!(
            self.toks.get(self.at + offset).map(|t| &t.kind),
            Some(TokKind::Word(w)) if w.eq_ignore_ascii_case(kw)
        )
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek_kw(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), AstError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected {}", kw.to_uppercase())))
        }
    }

    fn peek_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(TokKind::Sym(s)) if *s == sym)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if self.peek_sym(sym) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), AstError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.err(format!("expected {sym:?}")))
        }
    }

    // query := select_stmt ((UNION [ALL] | INTERSECT | EXCEPT) select_stmt)*
    fn query(&mut self) -> Result<SqlNode, AstError> {
        let mut left = self.select_stmt()?;
        loop {
            let op = if self.eat_kw("union") {
                if self.eat_kw("all") {
                    "union all"
                } else {
                    "union"
                }
            } else if self.eat_kw("intersect") {
                "intersect"
            } else if self.eat_kw("except") {
                "except"
            } else {
                break;
            };
            let right = self.select_stmt()?;
            left = SqlNode::with_children(op, NodeKind::Operator, vec![left, right]);
        }
        Ok(left)
    }

    fn select_stmt(&mut self) -> Result<SqlNode, AstError> {
        self.expect_kw("select")?;
        let mut select = SqlNode::new("select", NodeKind::Keyword);
        if self.eat_kw("distinct") {
            select
                .children
                .push(SqlNode::new("distinct", NodeKind::Keyword));
        }
        loop {
            select.children.push(self.select_item()?);
            if !self.eat_sym(",") {
                break;
            }
        }
        if self.eat_kw("from") {
            let mut from = SqlNode::new("from", NodeKind::Keyword);
            loop {
                from.children.push(self.table_ref()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            select.children.push(from);
        }
        if self.eat_kw("where") {
            let pred = self.expr()?;
            select.children.push(SqlNode::with_children(
                "where",
                NodeKind::Keyword,
                vec![pred],
            ));
        }
        if self.peek_kw("group") {
            self.expect_kw("group")?;
            self.expect_kw("by")?;
            let mut group = SqlNode::new("group by", NodeKind::Keyword);
            loop {
                group.children.push(self.expr()?);
                if !self.eat_sym(",") {
                    break;
                }
            }
            select.children.push(group);
        }
        if self.eat_kw("having") {
            let pred = self.expr()?;
            select.children.push(SqlNode::with_children(
                "having",
                NodeKind::Keyword,
                vec![pred],
            ));
        }
        if self.peek_kw("order") {
            self.expect_kw("order")?;
            self.expect_kw("by")?;
            let mut order = SqlNode::new("order by", NodeKind::Keyword);
            loop {
                let item = self.expr()?;
                let item = if self.eat_kw("asc") {
                    SqlNode::with_children("asc", NodeKind::Keyword, vec![item])
                } else if self.eat_kw("desc") {
                    SqlNode::with_children("desc", NodeKind::Keyword, vec![item])
                } else {
                    item
                };
                order.children.push(item);
                if !self.eat_sym(",") {
                    break;
                }
            }
            select.children.push(order);
        }
        if self.eat_kw("limit") {
            let mut limit = SqlNode::new("limit", NodeKind::Keyword);
            limit.children.push(self.expr()?);
            if self.eat_kw("offset") || self.eat_sym(",") {
                limit.children.push(self.expr()?);
            }
            select.children.push(limit);
        }
        Ok(select)
    }

    fn select_item(&mut self) -> Result<SqlNode, AstError> {
        let item = self.expr()?;
        if self.eat_kw("as") {
            let alias = self.identifier()?;
            return Ok(SqlNode::with_children(
                "as",
                NodeKind::Operator,
                vec![item, alias],
            ));
        }
        Ok(item)
    }

    // table_ref := primary_table (join primary_table [ON expr])*
    fn table_ref(&mut self) -> Result<SqlNode, AstError> {
        let mut left = self.primary_table()?;
        loop {
            let join_label = if self.eat_kw("join") {
                "join"
            } else if self.peek_kw("inner") && self.peek_kw_at(1, "join") {
                self.at += 2;
                "inner join"
            } else if self.peek_kw("cross") && self.peek_kw_at(1, "join") {
                self.at += 2;
                "cross join"
            } else if self.peek_kw("left") || self.peek_kw("right") || self.peek_kw("full") {
                let side = match self.bump() {
                    Some(TokKind::Word(w)) => w.to_lowercase(),
                    _ => unreachable!(),
                };
                self.eat_kw("outer");
                self.expect_kw("join")?;
                match side.as_str() {
                    "left" => "left join",
                    "right" => "right join",
                    _ => "full join",
                }
            } else {
                break;
            };
            let right = self.primary_table()?;
            let mut children = vec![left, right];
            if self.eat_kw("on") {
                let pred = self.expr()?;
                children.push(SqlNode::with_children("on", NodeKind::Keyword, vec![pred]));
            }
            left = SqlNode::with_children(join_label, NodeKind::Operator, children);
        }
        Ok(left)
    }

    fn primary_table(&mut self) -> Result<SqlNode, AstError> {
        let table = if self.eat_sym("(") {
            let sub = self.query()?;
            self.expect_sym(")")?;
            sub
        } else {
            self.identifier()?
        };
        // `name AS alias` or bare `name alias`
        if self.eat_kw("as") {
            let alias = self.identifier()?;
            return Ok(SqlNode::with_children(
                "as",
                NodeKind::Operator,
                vec![table, alias],
            ));
        }
        if let Some(TokKind::Word(w)) = self.peek() {
            if !RESERVED.contains(&w.to_lowercase().as_str()) {
                let alias = self.identifier()?;
                return Ok(SqlNode::with_children(
                    "as",
                    NodeKind::Operator,
                    vec![table, alias],
                ));
            }
        }
        Ok(table)
    }

    fn identifier(&mut self) -> Result<SqlNode, AstError> {
        match self.peek() {
            Some(TokKind::Word(w)) => {
                let mut name = w.to_lowercase();
                if RESERVED.contains(&name.as_str()) {
                    return Err(self.err(format!("expected identifier, found keyword {name:?}")));
                }
                self.at += 1;
                while self.eat_sym(".") {
                    match self.peek() {
                        Some(TokKind::Word(part)) => {
                            name.push('.');
                            name.push_str(&part.to_lowercase());
                            self.at += 1;
                        }
                        Some(TokKind::Sym("*")) => {
                            name.push_str(".*");
                            self.at += 1;
                            break;
                        }
                        _ => return Err(self.err("expected name after '.'")),
                    }
                }
                Ok(SqlNode::new(name, NodeKind::Identifier))
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    // Precedence: OR < AND < NOT < comparison < additive < multiplicative < unary.
    fn expr(&mut self) -> Result<SqlNode, AstError> {
        let mut left = self.and_expr()?;
        while self.eat_kw("or") {
            let right = self.and_expr()?;
            left = SqlNode::with_children("or", NodeKind::Operator, vec![left, right]);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<SqlNode, AstError> {
        let mut left = self.not_expr()?;
        while self.peek_kw("and") {
            self.at += 1;
            let right = self.not_expr()?;
            left = SqlNode::with_children("and", NodeKind::Operator, vec![left, right]);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<SqlNode, AstError> {
        if self.peek_kw("not") {
            // NOT EXISTS fuses into one operator, mirroring NOT IN.
            if self.peek_kw_at(1, "exists") {
                self.at += 2;
                self.expect_sym("(")?;
                let sub = self.query()?;
                self.expect_sym(")")?;
                return Ok(SqlNode::with_children(
                    "not exists",
                    NodeKind::Operator,
                    vec![sub],
                ));
            }
            self.at += 1;
            let inner = self.not_expr()?;
            return Ok(SqlNode::with_children(
                "not",
                NodeKind::Operator,
                vec![inner],
            ));
        }
        self.predicate()
    }

    fn predicate(&mut self) -> Result<SqlNode, AstError> {
        let left = self.additive()?;
        if let Some(TokKind::Sym(s)) = self.peek() {
            if matches!(*s, "=" | "!=" | "<>" | "<" | "<=" | ">" | ">=") {
                let op = *s;
                self.at += 1;
                let right = self.additive()?;
                return Ok(SqlNode::with_children(
                    op,
                    NodeKind::Operator,
                    vec![left, right],
                ));
            }
        }
        let negated = if self.peek_kw("not")
            && (self.peek_kw_at(1, "in") || self.peek_kw_at(1, "like") || self.peek_kw_at(1, "between"))
        {
            self.at += 1;
            true
        } else {
            false
        };
        if self.eat_kw("in") {
            let label = if negated { "not in" } else { "in" };
            self.expect_sym("(")?;
            let mut children = vec![left];
            if self.peek_kw("select") {
                children.push(self.query()?);
            } else {
                loop {
                    children.push(self.additive()?);
                    if !self.eat_sym(",") {
                        break;
                    }
                }
            }
            self.expect_sym(")")?;
            return Ok(SqlNode::with_children(label, NodeKind::Operator, children));
        }
        if self.eat_kw("like") {
            let label = if negated { "not like" } else { "like" };
            let pattern = self.additive()?;
            return Ok(SqlNode::with_children(
                label,
                NodeKind::Operator,
                vec![left, pattern],
            ));
        }
        if self.eat_kw("between") {
            let label = if negated { "not between" } else { "between" };
            let lo = self.additive()?;
            self.expect_kw("and")?;
            let hi = self.additive()?;
            return Ok(SqlNode::with_children(
                label,
                NodeKind::Operator,
                vec![left, lo, hi],
            ));
        }
        if negated {
            return Err(self.err("expected IN, LIKE or BETWEEN after NOT"));
        }
        if self.eat_kw("is") {
            let label = if self.eat_kw("not") {
                "is not null"
            } else {
                "is null"
            };
            self.expect_kw("null")?;
            return Ok(SqlNode::with_children(
                label,
                NodeKind::Operator,
                vec![left],
            ));
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<SqlNode, AstError> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.peek_sym("+") {
                "+"
            } else if self.peek_sym("-") {
                "-"
            } else {
                break;
            };
            self.at += 1;
            let right = self.multiplicative()?;
            left = SqlNode::with_children(op, NodeKind::Operator, vec![left, right]);
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> Result<SqlNode, AstError> {
        let mut left = self.unary()?;
        loop {
            let op = if self.peek_sym("*") {
                "*"
            } else if self.peek_sym("/") {
                "/"
            } else if self.peek_sym("%") {
                "%"
            } else {
                break;
            };
            self.at += 1;
            let right = self.unary()?;
            left = SqlNode::with_children(op, NodeKind::Operator, vec![left, right]);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<SqlNode, AstError> {
        if self.eat_sym("-") {
            let inner = self.unary()?;
            return Ok(SqlNode::with_children("-", NodeKind::Operator, vec![inner]));
        }
        if self.eat_sym("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<SqlNode, AstError> {
        match self.peek().cloned() {
            Some(TokKind::Number(n)) => {
                self.at += 1;
                Ok(SqlNode::new(n.to_lowercase(), NodeKind::Literal))
            }
            Some(TokKind::Str(s)) => {
                self.at += 1;
                Ok(SqlNode::new(s.to_lowercase(), NodeKind::Literal))
            }
            Some(TokKind::Sym("*")) => {
                self.at += 1;
                Ok(SqlNode::new("*", NodeKind::Star))
            }
            Some(TokKind::Sym("(")) => {
                self.at += 1;
                // Either a scalar subquery or a parenthesized expression;
                // parentheses themselves do not become nodes.
                let inner = if self.peek_kw("select") {
                    self.query()?
                } else {
                    self.expr()?
                };
                self.expect_sym(")")?;
                Ok(inner)
            }
            Some(TokKind::Word(w)) => {
                if w.eq_ignore_ascii_case("exists") {
                    self.at += 1;
                    self.expect_sym("(")?;
                    let sub = self.query()?;
                    self.expect_sym(")")?;
                    return Ok(SqlNode::with_children(
                        "exists",
                        NodeKind::Operator,
                        vec![sub],
                    ));
                }
                if w.eq_ignore_ascii_case("case") {
                    return self.case_expr();
                }
                if w.eq_ignore_ascii_case("null") {
                    self.at += 1;
                    return Ok(SqlNode::new("null", NodeKind::Literal));
                }
                // Function call: word immediately followed by '('.
                if matches!(
                    self.toks.get(self.at + 1).map(|t| &t.kind),
                    Some(TokKind::Sym("("))
                ) {
                    let name = w.to_lowercase();
                    self.at += 2;
                    let mut call = SqlNode::new(name, NodeKind::Function);
                    if self.eat_kw("distinct") {
                        call.children
                            .push(SqlNode::new("distinct", NodeKind::Keyword));
                    }
                    if !self.peek_sym(")") {
                        loop {
                            call.children.push(self.expr()?);
                            if !self.eat_sym(",") {
                                break;
                            }
                        }
                    }
                    self.expect_sym(")")?;
                    return Ok(call);
                }
                self.identifier()
            }
            _ => Err(self.err("expected expression")),
        }
    }

    fn case_expr(&mut self) -> Result<SqlNode, AstError> {
        self.expect_kw("case")?;
        let mut node = SqlNode::new("case", NodeKind::Keyword);
        while self.eat_kw("when") {
            let cond = self.expr()?;
            self.expect_kw("then")?;
            let value = self.expr()?;
            node.children.push(SqlNode::with_children(
                "when",
                NodeKind::Keyword,
                vec![cond, value],
            ));
        }
        if self.eat_kw("else") {
            let value = self.expr()?;
            node.children.push(SqlNode::with_children(
                "else",
                NodeKind::Keyword,
                vec![value],
            ));
        }
        self.expect_kw("end")?;
        Ok(node)
    }
}
