use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const DEFAULT_TOPOLOGY: &str = include_str!("../../data/default_topology.txt");

/// Links, routes and users of a bandwidth-sharing network.
///
/// Routes are numbered so that every user's routes are contiguous, which
/// makes the route order the player block order.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    /// Routes per user, in route order.
    user_routes: Vec<usize>,
    /// `A[l, r] = 1` iff route `r` uses link `l`.
    routing: DMatrix<f64>,
    capacities: DVector<f64>,
    route_mean: DVector<f64>,
    route_halfwidth: DVector<f64>,
}

fn topo_err(msg: impl Into<String>) -> Error {
    Error::Topology(msg.into())
}

impl NetworkTopology {
    pub fn new(
        user_routes: Vec<usize>,
        routing: DMatrix<f64>,
        capacities: DVector<f64>,
    ) -> Result<Self> {
        let routes = routing.ncols();
        let t = Self {
            user_routes,
            routing,
            capacities,
            route_mean: DVector::from_element(routes, 1.0),
            route_halfwidth: DVector::from_element(routes, 0.5),
        };
        t.validate()?;
        Ok(t)
    }

    /// Overrides the per-route noise base `(μ_r, w_r)`.
    pub fn with_noise_base(mut self, mean: DVector<f64>, halfwidth: DVector<f64>) -> Result<Self> {
        self.route_mean = mean;
        self.route_halfwidth = halfwidth;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let (m, routes) = self.routing.shape();
        if m == 0 || routes == 0 {
            return Err(topo_err("need at least one link and one route"));
        }
        if self.user_routes.is_empty() || self.user_routes.contains(&0) {
            return Err(topo_err("every user needs at least one route"));
        }
        if self.user_routes.iter().sum::<usize>() != routes {
            return Err(topo_err(format!(
                "users cover {} routes, routing matrix has {routes}",
                self.user_routes.iter().sum::<usize>()
            )));
        }
        if self.routing.iter().any(|&a| a != 0.0 && a != 1.0) {
            return Err(topo_err("routing matrix entries must be 0 or 1"));
        }
        if let Some(r) = (0..routes).find(|&r| self.routing.column(r).sum() == 0.0) {
            return Err(topo_err(format!("route {} uses no link", r + 1)));
        }
        if self.capacities.len() != m {
            return Err(topo_err("one capacity per link required"));
        }
        if self.capacities.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
            return Err(topo_err("capacities must be finite and >= 0"));
        }
        if self.route_mean.len() != routes || self.route_halfwidth.len() != routes {
            return Err(topo_err("noise base needs one entry per route"));
        }
        let bad_noise = self
            .route_mean
            .iter()
            .chain(self.route_halfwidth.iter())
            .any(|v| !(v.is_finite() && *v >= 0.0));
        if bad_noise {
            return Err(topo_err("noise base values must be finite and >= 0"));
        }
        Ok(())
    }

    /// The shipped 20-link, 9-route, 5-user network.
    pub fn default_network() -> Self {
        Self::parse(DEFAULT_TOPOLOGY).expect("shipped topology is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the textual topology format (see `data/default_topology.txt`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut users: Option<Vec<Vec<usize>>> = None;
        let mut noise: Vec<(usize, f64, f64)> = Vec::new();
        let mut links: Vec<(usize, f64, Vec<usize>)> = Vec::new();
        let mut seen_header = false;

        let num = |s: &str, what: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| topo_err(format!("line {line}: bad {what} '{s}'")))
        };
        let id = |s: &str, line: usize| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(topo_err(format!("line {line}: bad id '{s}'"))),
            }
        };
        let id_list = |s: &str, line: usize| -> Result<Vec<usize>> {
            s.split(',').map(|t| id(t.trim(), line)).collect()
        };

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "users" => {
                    users = Some(
                        fields[1..]
                            .iter()
                            .map(|f| id_list(f, line_no))
                            .collect::<Result<_>>()?,
                    );
                }
                "route" => {
                    if fields.len() != 4 {
                        return Err(topo_err(format!("line {line_no}: route <id> <mean> <halfwidth>")));
                    }
                    noise.push((
                        id(fields[1], line_no)?,
                        num(fields[2], "mean", line_no)?,
                        num(fields[3], "half-width", line_no)?,
                    ));
                }
                "link" => {
                    if fields != ["link", "capacity", "routes"] {
                        return Err(topo_err(format!(
                            "line {line_no}: header must be 'link capacity routes'"
                        )));
                    }
                    seen_header = true;
                }
                _ => {
                    if !seen_header {
                        return Err(topo_err(format!("line {line_no}: link row before header")));
                    }
                    if fields.len() != 3 {
                        return Err(topo_err(format!(
                            "line {line_no}: expected '<link> <capacity> <routes>'"
                        )));
                    }
                    links.push((
                        id(fields[0], line_no)?,
                        num(fields[1], "capacity", line_no)?,
                        id_list(fields[2], line_no)?,
                    ));
                }
            }
        }

        let users = users.ok_or_else(|| topo_err("missing 'users' line"))?;
        let routes: usize = users.iter().map(Vec::len).sum();
        let expected: Vec<usize> = (1..=routes).collect();
        let flat: Vec<usize> = users.iter().flatten().copied().collect();
        if flat != expected {
            return Err(topo_err(
                "user route sets must list routes 1..R once each, contiguously per user",
            ));
        }
        links.sort_by_key(|l| l.0);
        if links.iter().map(|l| l.0).ne(1..=links.len()) {
            return Err(topo_err("link ids must be 1..m, each once"));
        }

        let mut routing = DMatrix::zeros(links.len(), routes);
        let mut caps = DVector::zeros(links.len());
        for (l, (_, cap, rs)) in links.iter().enumerate() {
            caps[l] = *cap;
            for &r in rs {
                if r > routes {
                    return Err(topo_err(format!("link {} references unknown route {r}", l + 1)));
                }
                routing[(l, r - 1)] = 1.0;
            }
        }
        let mut topo = Self::new(users.iter().map(Vec::len).collect(), routing, caps)?;
        for (r, mean, hw) in noise {
            if r > routes {
                return Err(topo_err(format!("noise line for unknown route {r}")));
            }
            topo.route_mean[r - 1] = mean;
            topo.route_halfwidth[r - 1] = hw;
        }
        topo.validate()?;
        Ok(topo)
    }

    /// Writes the topology back in the format read by [`parse`](Self::parse).
    /// Numbers are printed in shortest round-trip form, so parsing the
    /// output reproduces `self` exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::from("users");
        let mut next = 1;
        for &count in &self.user_routes {
            let ids: Vec<String> = (next..next + count).map(|r| r.to_string()).collect();
            out.push(' ');
            out.push_str(&ids.join(","));
            next += count;
        }
        out.push('\n');
        for r in 0..self.num_routes() {
            out.push_str(&format!(
                "route {} {} {}\n",
                r + 1,
                self.route_mean[r],
                self.route_halfwidth[r]
            ));
        }
        out.push_str("link capacity routes\n");
        for l in 0..self.num_links() {
            let routes: Vec<String> = (0..self.num_routes())
                .filter(|&r| self.routing[(l, r)] > 0.0)
                .map(|r| (r + 1).to_string())
                .collect();
            out.push_str(&format!("{} {} {}\n", l + 1, self.capacities[l], routes.join(",")));
        }
        out
    }

    pub fn num_links(&self) -> usize {
        self.routing.nrows()
    }

    pub fn num_routes(&self) -> usize {
        self.routing.ncols()
    }

    pub fn num_users(&self) -> usize {
        self.user_routes.len()
    }

    pub fn user_routes(&self) -> &[usize] {
        &self.user_routes
    }

    pub fn routing(&self) -> &DMatrix<f64> {
        &self.routing
    }

    pub fn capacities(&self) -> &DVector<f64> {
        &self.capacities
    }

    pub fn route_mean(&self) -> &DVector<f64> {
        &self.route_mean
    }

    pub fn route_halfwidth(&self) -> &DVector<f64> {
        &self.route_halfwidth
    }
}
