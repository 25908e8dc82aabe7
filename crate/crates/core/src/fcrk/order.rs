use super::tableau::{poly_eval, FcrkTableau};

/// Residual of one order condition, measured as the largest absolute
/// polynomial coefficient of `lhs(theta) - rhs(theta)`.
#[derive(Debug, Clone)]
pub struct ConditionResidual {
    pub label: String,
    pub order: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct OrderReport {
    pub conditions: Vec<ConditionResidual>,
}

impl OrderReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }
}

/// Rooted tree stored as the sorted indices of its subtrees.
#[derive(Debug, Clone)]
struct Tree {
    children: Vec<usize>,
    order: usize,
    gamma: f64,
    label: String,
}

/// All rooted trees with at most `max_order` vertices, in order of size.
fn rooted_trees(max_order: usize) -> Vec<Tree> {
    let mut trees = vec![Tree {
        children: Vec::new(),
        order: 1,
        gamma: 1.0,
        label: "t".into(),
    }];
    for n in 2..=max_order {
        let known = trees.len();
        let mut found = Vec::new();
        let mut stack = Vec::new();
        collect_forests(&trees[..known], n - 1, 0, &mut stack, &mut found);
        for children in found {
            let gamma = n as f64 * children.iter().map(|&c| trees[c].gamma).product::<f64>();
            let label = format!(
                "[{}]",
                children
                    .iter()
                    .map(|&c| trees[c].label.as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            );
            trees.push(Tree {
                children,
                order: n,
                gamma,
                label,
            });
        }
    }
    trees
}

/// Non-decreasing index sequences from `from` onwards whose orders sum to `rest`.
fn collect_forests(
    trees: &[Tree],
    rest: usize,
    from: usize,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if rest == 0 {
        out.push(stack.clone());
        return;
    }
    for i in from..trees.len() {
        if trees[i].order <= rest {
            stack.push(i);
            collect_forests(trees, rest - trees[i].order, i, stack, out);
            stack.pop();
        }
    }
}

fn poly_residual(lhs: &[f64], rhs: &[f64]) -> f64 {
    let n = lhs.len().max(rhs.len());
    (0..n)
        .map(|m| lhs.get(m).copied().unwrap_or(0.0) - rhs.get(m).copied().unwrap_or(0.0))
        .fold(0.0, |acc: f64, r| acc.max(r.abs()))
}

/// Checks the continuous order conditions of `tab` up to its nominal order:
/// for every rooted tree `t` with `|t| <= p`,
/// `sum_i b_i(theta) Phi_i(t) = theta^|t| / gamma(t)` as polynomials, and
/// every stage interpolant satisfies `sum_j a_ij(theta) = theta`.
pub fn verify_order_conditions(tab: &FcrkTableau) -> OrderReport {
    let s = tab.stages();
    let a = tab.a_at_nodes();
    let trees = rooted_trees(tab.order);
    // phi[t][i] = elementary weight of tree t at stage i.
    let mut phi: Vec<Vec<f64>> = Vec::with_capacity(trees.len());
    let mut conditions = Vec::new();
    for tree in &trees {
        let weights: Vec<f64> = (0..s)
            .map(|i| {
                tree.children
                    .iter()
                    .map(|&ch| (0..i).map(|j| a[i][j] * phi[ch][j]).sum::<f64>())
                    .product()
            })
            .collect();
        let deg = tab.degree().max(tree.order);
        let mut lhs = vec![0.0; deg + 1];
        for (i, w) in weights.iter().enumerate() {
            for (m, bc) in tab.b[i].iter().enumerate() {
                lhs[m] += bc * w;
            }
        }
        let mut rhs = vec![0.0; deg + 1];
        rhs[tree.order] = 1.0 / tree.gamma;
        conditions.push(ConditionResidual {
            label: format!("tree {}", tree.label),
            order: tree.order,
            residual: poly_residual(&lhs, &rhs),
        });
        phi.push(weights);
    }
    for (i, row) in tab.a.iter().enumerate().skip(1) {
        let deg = row.iter().map(|p| p.len()).max().unwrap_or(1);
        let mut sum = vec![0.0; deg.max(2)];
        for p in row {
            for (m, c) in p.iter().enumerate() {
                sum[m] += c;
            }
        }
        conditions.push(ConditionResidual {
            label: format!("stage {} row sum", i + 1),
            order: 1,
            residual: poly_residual(&sum, &[0.0, 1.0]),
        });
        let at_node: f64 = row.iter().map(|p| poly_eval(p, tab.c[i])).sum();
        conditions.push(ConditionResidual {
            label: format!("stage {} node", i + 1),
            order: 1,
            residual: (at_node - tab.c[i]).abs(),
        });
    }
    OrderReport { conditions }
}
