//! Currency exchange markets as flow networks and arbitrage-free pricing.
//!
//! Each currency is a vertex. The edge `(A, B)` with `A` listed before `B`
//! carries `log r^{A/B}`, the log of the number of units of `B` bought by one
//! unit of `A`. A cycle of conversions multiplies the rates along it, so the
//! gain of a cycle is `exp` of the flow summed along it.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::graph::{EdgeFlow, FlowNetwork, SparseOperator};
use crate::solvers::{box_qp, BoxQpReport, LinearOperator};

/// Default weight of the proximity-to-mid term.
pub const DEFAULT_LAMBDA: f64 = 1e-3;

/// Mids quoted in both directions must satisfy
/// `|log r^{A/B} + log r^{B/A}| ≤ MID_CONSISTENCY`.
pub const MID_CONSISTENCY: f64 = 1e-9;

/// One row of a market file: raw (non-log) rates of `base` in `quote`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quote {
    pub base: String,
    pub quote: String,
    pub bid: f64,
    pub mid: f64,
    pub ask: f64,
}

impl Quote {
    pub fn new(base: &str, quote: &str, bid: f64, mid: f64, ask: f64) -> Self {
        Self {
            base: base.to_string(),
            quote: quote.to_string(),
            bid,
            mid,
            ask,
        }
    }
}

/// A complete market snapshot in log-rate form.
#[derive(Debug, Clone)]
pub struct ExchangeMarket {
    currencies: Vec<String>,
    net: FlowNetwork,
    bid: EdgeFlow,
    mid: EdgeFlow,
    ask: EdgeFlow,
}

struct Interval {
    lo: f64,
    mid: f64,
    hi: f64,
}

impl ExchangeMarket {
    /// Currencies are ordered by first appearance. Every pair must be
    /// quoted at least once, in either direction.
    pub fn from_quotes(quotes: &[Quote]) -> Result<Self> {
        let mut currencies: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut intern = |name: &str| -> usize {
            if let Some(&i) = index.get(name) {
                return i;
            }
            index.insert(name.to_string(), currencies.len());
            currencies.push(name.to_string());
            currencies.len() - 1
        };

        let mut crossed = Vec::new();
        let mut pairs: HashMap<(usize, usize), Interval> = HashMap::new();
        for q in quotes {
            if q.base == q.quote {
                return Err(Error::Market(format!("quote of {} against itself", q.base)));
            }
            for v in [q.bid, q.mid, q.ask] {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Market(format!(
                        "{}/{}: rates must be positive and finite",
                        q.base, q.quote
                    )));
                }
            }
            if q.bid > q.ask {
                crossed.push(format!("{}/{}", q.base, q.quote));
                continue;
            }
            if q.mid < q.bid || q.mid > q.ask {
                return Err(Error::Market(format!(
                    "{}/{}: mid {} outside [{}, {}]",
                    q.base, q.quote, q.mid, q.bid, q.ask
                )));
            }
            let a = intern(&q.base);
            let b = intern(&q.quote);
            let (key, iv) = if a < b {
                (
                    (a, b),
                    Interval {
                        lo: q.bid.ln(),
                        mid: q.mid.ln(),
                        hi: q.ask.ln(),
                    },
                )
            } else {
                (
                    (b, a),
                    Interval {
                        lo: -q.ask.ln(),
                        mid: -q.mid.ln(),
                        hi: -q.bid.ln(),
                    },
                )
            };
            match pairs.get_mut(&key) {
                None => {
                    pairs.insert(key, iv);
                }
                Some(prev) => {
                    if (prev.mid - iv.mid).abs() > MID_CONSISTENCY {
                        return Err(Error::Market(format!(
                            "{}/{}: inconsistent mids across quotes (log difference {:e})",
                            q.base,
                            q.quote,
                            (prev.mid - iv.mid).abs()
                        )));
                    }
                    prev.lo = prev.lo.max(iv.lo);
                    prev.hi = prev.hi.min(iv.hi);
                    if prev.lo > prev.hi {
                        crossed.push(format!("{}/{}", q.base, q.quote));
                    }
                }
            }
        }
        if !crossed.is_empty() {
            return Err(Error::CrossedMarket(crossed));
        }
        let n = currencies.len();
        if n < 2 {
            return Err(Error::Market("a market needs at least two currencies".into()));
        }
        let mut edge_list = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in (a + 1)..n {
                if !pairs.contains_key(&(a, b)) {
                    return Err(Error::Market(format!(
                        "missing quote for {}/{}",
                        currencies[a], currencies[b]
                    )));
                }
                edge_list.push((a, b));
            }
        }
        let net = FlowNetwork::with_vertices(n, &edge_list)?;
        let m = net.m();
        let (mut bid, mut mid, mut ask) = (EdgeFlow::zeros(m), EdgeFlow::zeros(m), EdgeFlow::zeros(m));
        for (r, &(a, b)) in net.edges().iter().enumerate() {
            let iv = &pairs[&(a, b)];
            bid[r] = iv.lo;
            // Intersected bounds can exclude a one-sided mid; keep it inside.
            mid[r] = iv.mid.clamp(iv.lo, iv.hi);
            ask[r] = iv.hi;
        }
        Ok(Self {
            currencies,
            net,
            bid,
            mid,
            ask,
        })
    }

    /// Reads CSV with header `base,quote,bid,mid,ask` (columns may appear in
    /// any order).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?
            .clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::Parse {
                    line: 1,
                    msg: format!("missing column '{name}'"),
                })
        };
        let (cb, cq, cbid, cmid, cask) = (col("base")?, col("quote")?, col("bid")?, col("mid")?, col("ask")?);
        let mut quotes = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let num = |c: usize| -> Result<f64> {
                let s = rec.get(c).unwrap_or("");
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    msg: format!("invalid rate '{s}'"),
                })
            };
            quotes.push(Quote {
                base: rec.get(cb).unwrap_or("").to_string(),
                quote: rec.get(cq).unwrap_or("").to_string(),
                bid: num(cbid)?,
                mid: num(cmid)?,
                ask: num(cask)?,
            });
        }
        Self::from_quotes(&quotes)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Market(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(std::io::BufReader::new(file))
    }

    pub fn currencies(&self) -> &[String] {
        &self.currencies
    }

    pub fn currency_index(&self, name: &str) -> Option<usize> {
        self.currencies.iter().position(|c| c == name)
    }

    pub fn network(&self) -> &FlowNetwork {
        &self.net
    }

    pub fn bid(&self) -> &EdgeFlow {
        &self.bid
    }

    pub fn mid(&self) -> &EdgeFlow {
        &self.mid
    }

    pub fn ask(&self) -> &EdgeFlow {
        &self.ask
    }

    /// `"A/B"` for edge `r`.
    pub fn pair_name(&self, r: usize) -> String {
        let (a, b) = self.net.edges()[r];
        format!("{}/{}", self.currencies[a], self.currencies[b])
    }

    /// Cycle gain of the mid rates along a sequence of currency names.
    pub fn mid_gain(&self, cycle: &[&str]) -> Result<f64> {
        let idx = cycle
            .iter()
            .map(|c| {
                self.currency_index(c)
                    .ok_or_else(|| Error::Market(format!("unknown currency {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        arbitrage_gain(&self.net, &self.mid, &idx)
    }

    /// Log-rates rescaled so that bid maps to 0.5 and ask to -0.5.
    pub fn normalized_for_display(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .zip(self.bid.iter().zip(self.ask.iter()))
            .map(|(x, (b, a))| {
                let w = a - b;
                if w > 0.0 {
                    (0.5 * (a + b) - x) / w
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// `exp` of the flow summed along `v₀ → v₁ → … → v₀`. Consecutive vertices
/// must be adjacent; a trailing repeat of `v₀` is accepted.
pub fn arbitrage_gain(net: &FlowNetwork, f: &[f64], cycle: &[usize]) -> Result<f64> {
    net.check_flow(f)?;
    let mut cyc = cycle;
    if cyc.len() > 1 && cyc.first() == cyc.last() {
        cyc = &cyc[..cyc.len() - 1];
    }
    if cyc.len() < 2 {
        return Err(Error::InvalidParameter("a cycle needs at least two vertices".into()));
    }
    let mut total = 0.0;
    for k in 0..cyc.len() {
        let (a, b) = (cyc[k], cyc[(k + 1) % cyc.len()]);
        if a >= net.n() || b >= net.n() {
            return Err(Error::InvalidVertex(a.max(b) as i64));
        }
        let (r, sign) = net
            .edge_between(a, b)
            .ok_or_else(|| Error::NotAdjacent(net.vertex_id(a), net.vertex_id(b)))?;
        total += sign * f[r];
    }
    Ok(total.exp())
}

/// Gain `exp(curl)` of every triangle `(i, j, k)` traversed `i → j → k → i`.
pub fn triangle_gains(net: &FlowNetwork, f: &[f64]) -> Result<Vec<f64>> {
    Ok(net.curl(f)?.into_iter().map(f64::exp).collect())
}

/// `‖Cᵀ f‖² + λ² ‖f - f^mid‖²`
pub fn pricing_objective(market: &ExchangeMarket, f: &[f64], lambda: f64) -> Result<f64> {
    let curl = market.net.curl(f)?;
    let prox: f64 = f.iter().zip(market.mid.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(curl.iter().map(|c| c * c).sum::<f64>() + lambda * lambda * prox)
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    /// Fair log-rates, within `[bid, ask]` on every edge.
    pub fair: EdgeFlow,
    pub report: BoxQpReport,
}

impl PricingResult {
    /// Fair rates `exp(f)`.
    pub fn rates(&self) -> Vec<f64> {
        self.fair.iter().map(|v| v.exp()).collect()
    }
}

/// `2 (C Cᵀ + λ² I)`, the Hessian of the pricing objective.
struct PricingHessian {
    c: SparseOperator,
    ct: SparseOperator,
    lambda2: f64,
}

impl LinearOperator for PricingHessian {
    fn nrows(&self) -> usize {
        self.c.nrows()
    }
    fn ncols(&self) -> usize {
        self.c.nrows()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let t = self.ct.mul_vec(x);
        let cc = self.c.mul_vec(&t);
        for ((yi, ci), xi) in y.iter_mut().zip(cc).zip(x) {
            *yi = 2.0 * (ci + self.lambda2 * xi);
        }
    }
    fn apply_transpose(&self, y: &[f64], x: &mut [f64]) {
        self.apply(y, x)
    }
}

pub const PRICING_TOL: f64 = 1e-14;

/// Minimises `‖Cᵀ f‖² + λ² ‖f - f^mid‖²` subject to `f^bid ≤ f ≤ f^ask`.
pub fn price_arbitrage_free(market: &ExchangeMarket, lambda: f64) -> Result<PricingResult> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let c = market.net.curl_matrix();
    let hess = PricingHessian {
        ct: c.transpose(),
        c,
        lambda2: lambda * lambda,
    };
    let lin: Vec<f64> = market.mid.iter().map(|v| -2.0 * lambda * lambda * v).collect();
    let (fair, report) = box_qp(&hess, &lin, &market.bid, &market.ask, PRICING_TOL, 0)?;
    if !report.converged {
        warn!(
            "pricing QP stopped after {} iterations (stationarity {:e})",
            report.iterations, report.stationarity
        );
    }
    Ok(PricingResult {
        fair: EdgeFlow::new(fair),
        report,
    })
}
