//! Benchmark environments: stochastic grid worlds compiled to exact POMDPs,
//! and random POMDP generators for property tests.
//!
//! Grid world semantics:
//!
//! * Actions up/down/left/right (ids 0..4). With probability `slip` the
//!   intended action is replaced by a uniformly random one — which may
//!   re-draw the intended action, so the effective probability of executing
//!   the intended move is `(1 - slip) + slip/4`.
//! * Moving into a wall stays in place.
//! * The observation is the number of walls in the four neighboring cells
//!   (0..=4, so 5 observations), read deterministically from the **arrived**
//!   cell regardless of the action. The absorbing terminal state reads as
//!   fully walled in (observation 4).
//! * Reward is sparse: the goal cell carries `goal_reward` on every action
//!   taken from it, after which the agent drops into a zero-reward absorbing
//!   terminal state; every other cell pays `step_reward`.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::pomdp::Pomdp;
use crate::rng;

/// Discount stored on compiled grid worlds; evaluation-side discounting is a
/// separate knob, this one drives the fully-observable reference optimum.
pub const GRID_GAMMA: f64 = 0.99;

/// Number of grid actions (up, down, left, right).
pub const GRID_ACTIONS: usize = 4;

/// Number of grid observations (0..=4 neighboring walls).
pub const GRID_OBS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Wall,
    Free,
    Start,
    Goal,
}

/// A rectangular grid layout plus its noise and reward parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    cells: Vec<Vec<Cell>>,
    pub slip: f64,
    pub step_reward: f64,
    pub goal_reward: f64,
}

impl GridSpec {
    /// Parses a layout from text: `#` wall, `.` free, `S` start, `G` goal.
    /// Requires a rectangular grid with a walled outer boundary, exactly one
    /// `S` and one `G`, and every walkable cell reachable from `S`.
    pub fn parse(layout: &str, slip: f64, step_reward: f64, goal_reward: f64) -> Result<Self> {
        let mut cells = Vec::new();
        for (row, line) in layout.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let mut parsed = Vec::new();
            for (col, ch) in line.trim().chars().enumerate() {
                parsed.push(match ch {
                    '#' => Cell::Wall,
                    '.' => Cell::Free,
                    'S' => Cell::Start,
                    'G' => Cell::Goal,
                    other => {
                        return Err(Error::InvalidGrid(format!(
                            "unexpected character {other:?} at row {row}, column {col}"
                        )))
                    }
                });
            }
            cells.push(parsed);
        }
        let spec = GridSpec {
            cells,
            slip,
            step_reward,
            goal_reward,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.cells.len() < 3 || self.cells[0].len() < 3 {
            return Err(Error::InvalidGrid("grid smaller than 3x3".into()));
        }
        let width = self.cells[0].len();
        if !self.cells.iter().all(|row| row.len() == width) {
            return Err(Error::InvalidGrid("ragged rows".into()));
        }
        if !(0.0..1.0).contains(&self.slip) {
            return Err(Error::InvalidGrid(format!("slip {} outside [0, 1)", self.slip)));
        }
        let height = self.cells.len();
        for (r, row) in self.cells.iter().enumerate() {
            for (c, &cell) in row.iter().enumerate() {
                let boundary = r == 0 || r == height - 1 || c == 0 || c == width - 1;
                if boundary && cell != Cell::Wall {
                    return Err(Error::InvalidGrid(format!(
                        "boundary cell ({r},{c}) is not a wall"
                    )));
                }
            }
        }
        let starts = self.count(Cell::Start);
        let goals = self.count(Cell::Goal);
        if starts != 1 || goals != 1 {
            return Err(Error::InvalidGrid(format!(
                "expected exactly one S and one G, found {starts} and {goals}"
            )));
        }
        // Every walkable cell must be reachable from S.
        let walkable = self.walkable();
        let start = self.find(Cell::Start);
        let mut seen = std::collections::HashSet::from([start]);
        let mut frontier = vec![start];
        while let Some((r, c)) = frontier.pop() {
            for (nr, nc) in neighbors(r, c) {
                if self.is_walkable(nr, nc) && seen.insert((nr, nc)) {
                    frontier.push((nr, nc));
                }
            }
        }
        if seen.len() != walkable.len() {
            return Err(Error::InvalidGrid(format!(
                "{} walkable cells unreachable from S",
                walkable.len() - seen.len()
            )));
        }
        Ok(())
    }

    fn count(&self, kind: Cell) -> usize {
        self.cells
            .iter()
            .flat_map(|row| row.iter())
            .filter(|&&c| c == kind)
            .count()
    }

    fn find(&self, kind: Cell) -> (usize, usize) {
        for (r, row) in self.cells.iter().enumerate() {
            for (c, &cell) in row.iter().enumerate() {
                if cell == kind {
                    return (r, c);
                }
            }
        }
        unreachable!("validated grids contain the cell");
    }

    fn is_walkable(&self, r: usize, c: usize) -> bool {
        self.cells
            .get(r)
            .and_then(|row| row.get(c))
            .is_some_and(|&cell| cell != Cell::Wall)
    }

    /// Walkable cells in row-major order.
    fn walkable(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (r, row) in self.cells.iter().enumerate() {
            for (c, &cell) in row.iter().enumerate() {
                if cell != Cell::Wall {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Shortest-path distance from S to G through walkable cells.
    pub fn start_to_goal_distance(&self) -> usize {
        let start = self.find(Cell::Start);
        let goal = self.find(Cell::Goal);
        let mut dist = std::collections::HashMap::from([(start, 0usize)]);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some((r, c)) = queue.pop_front() {
            let d = dist[&(r, c)];
            if (r, c) == goal {
                return d;
            }
            for (nr, nc) in neighbors(r, c) {
                if self.is_walkable(nr, nc) && !dist.contains_key(&(nr, nc)) {
                    dist.insert((nr, nc), d + 1);
                    queue.push_back((nr, nc));
                }
            }
        }
        unreachable!("validated grids connect S to G");
    }

    /// The layout rendered back to text (used for hashing and docs).
    pub fn render(&self) -> String {
        self.cells
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| match c {
                        Cell::Wall => '#',
                        Cell::Free => '.',
                        Cell::Start => 'S',
                        Cell::Goal => 'G',
                    })
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Wall layout only (starts and goals erased); variants of one maze
    /// share this.
    pub fn wall_layout(&self) -> String {
        self.render().replace(['S', 'G'], ".")
    }
}

fn neighbors(r: usize, c: usize) -> [(usize, usize); 4] {
    // Grids are boundary-walled, so walkable cells never sit on row/col 0.
    [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)]
}

/// Action deltas in id order: up, down, left, right.
const DELTAS: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// Compiles a grid spec into an exact POMDP.
///
/// States are the walkable cells in row-major order plus one absorbing
/// terminal state (last index). The start distribution is one-hot.
pub fn compile_gridworld(spec: &GridSpec) -> Result<Pomdp> {
    spec.validate()?;
    let walkable = spec.walkable();
    let index: std::collections::HashMap<(usize, usize), usize> = walkable
        .iter()
        .enumerate()
        .map(|(i, &rc)| (rc, i))
        .collect();
    let k = walkable.len() + 1;
    let terminal = k - 1;
    let goal = index[&spec.find(Cell::Goal)];
    let start = index[&spec.find(Cell::Start)];

    let mut transition = vec![0.0; k * GRID_ACTIONS * k];
    let mut emission = vec![0.0; k * GRID_ACTIONS * GRID_OBS];
    let mut reward = vec![0.0; k * GRID_ACTIONS];

    let wall_count = |&(r, c): &(usize, usize)| -> usize {
        neighbors(r, c)
            .iter()
            .filter(|&&(nr, nc)| !spec.is_walkable(nr, nc))
            .count()
    };

    for (s, &(r, c)) in walkable.iter().enumerate() {
        for a in 0..GRID_ACTIONS {
            let t_row = &mut transition[(s * GRID_ACTIONS + a) * k..][..k];
            if s == goal {
                // Reward collected leaving the goal, then absorption.
                t_row[terminal] = 1.0;
                reward[s * GRID_ACTIONS + a] = spec.goal_reward;
                continue;
            }
            reward[s * GRID_ACTIONS + a] = spec.step_reward;
            for (executed, &(dr, dc)) in DELTAS.iter().enumerate() {
                let prob = if executed == a {
                    (1.0 - spec.slip) + spec.slip / GRID_ACTIONS as f64
                } else {
                    spec.slip / GRID_ACTIONS as f64
                };
                let nr = (r as isize + dr) as usize;
                let nc = (c as isize + dc) as usize;
                let target = if spec.is_walkable(nr, nc) {
                    index[&(nr, nc)]
                } else {
                    s
                };
                t_row[target] += prob;
            }
        }
    }
    for a in 0..GRID_ACTIONS {
        transition[(terminal * GRID_ACTIONS + a) * k + terminal] = 1.0;
    }

    for (s2, rc) in walkable.iter().enumerate() {
        let obs = wall_count(rc);
        for a in 0..GRID_ACTIONS {
            emission[(s2 * GRID_ACTIONS + a) * GRID_OBS + obs] = 1.0;
        }
    }
    for a in 0..GRID_ACTIONS {
        emission[(terminal * GRID_ACTIONS + a) * GRID_OBS + 4] = 1.0;
    }

    let mut initial = vec![0.0; k];
    initial[start] = 1.0;

    Ok(Pomdp {
        num_states: k,
        num_actions: GRID_ACTIONS,
        num_obs: GRID_OBS,
        transition,
        emission,
        reward,
        initial,
        gamma: GRID_GAMMA,
    })
}

/// Default slip probability of the built-in grids.
pub const BUILTIN_SLIP: f64 = 0.2;

const MAZE_A: &str = "\
######
#....#
#.##.#
#....#
#.S.G#
######";

const MAZE_B: &str = "\
######
#...S#
#.##.#
#....#
#...G#
######";

const MAZE_C: &str = "\
######
#S...#
#.##.#
#....#
#...G#
######";

/// The three built-in grid world variants: one fixed maze, three start
/// positions at strictly increasing shortest-path distance from the goal.
pub fn builtin_gridworlds() -> [GridSpec; 3] {
    [MAZE_A, MAZE_B, MAZE_C].map(|layout| {
        GridSpec::parse(layout, BUILTIN_SLIP, 0.0, 1.0)
            .expect("built-in layouts are valid")
    })
}

/// Resolves a built-in variant by name (`"A"`, `"B"` or `"C"`).
pub fn builtin_gridworld(name: &str) -> Result<GridSpec> {
    let [a, b, c] = builtin_gridworlds();
    match name {
        "A" | "a" => Ok(a),
        "B" | "b" => Ok(b),
        "C" | "c" => Ok(c),
        other => Err(Error::InvalidConfig(format!(
            "unknown built-in grid world {other:?}; expected A, B or C"
        ))),
    }
}

/// A random POMDP with Dirichlet-distributed rows: each transition and
/// emission row is a symmetric Dirichlet(`concentration`) draw, rewards are
/// uniform in `[0, reward_scale]`, the initial distribution is Dirichlet.
/// Deterministic under the seed.
pub fn random_pomdp(
    num_states: usize,
    num_actions: usize,
    num_obs: usize,
    concentration: f64,
    reward_scale: f64,
    gamma: f64,
    seed: u64,
) -> Pomdp {
    let mut stream = rng::stream(seed, 0);
    let gamma_dist = Gamma::new(concentration, 1.0).expect("positive shape");
    let mut dirichlet_row = |len: usize| -> Vec<f64> {
        let mut row: Vec<f64> = (0..len).map(|_| gamma_dist.sample(&mut stream)).collect();
        let sum: f64 = row.iter().sum();
        if sum <= f64::MIN_POSITIVE {
            return vec![1.0 / len as f64; len];
        }
        row.iter_mut().for_each(|v| *v /= sum);
        row
    };

    let mut transition = Vec::with_capacity(num_states * num_actions * num_states);
    for _ in 0..num_states * num_actions {
        transition.extend(dirichlet_row(num_states));
    }
    let mut emission = Vec::with_capacity(num_states * num_actions * num_obs);
    for _ in 0..num_states * num_actions {
        emission.extend(dirichlet_row(num_obs));
    }
    let initial = dirichlet_row(num_states);
    let reward: Vec<f64> = (0..num_states * num_actions)
        .map(|_| stream.random::<f64>() * reward_scale)
        .collect();

    Pomdp {
        num_states,
        num_actions,
        num_obs,
        transition,
        emission,
        reward,
        initial,
        gamma,
    }
}
