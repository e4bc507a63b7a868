//! Python bindings. Results cross the boundary as plain dicts and lists.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde_json::{json, Value};

use vcdlab::cli::{parse_delta, parse_element, parse_set};
use vcdlab::definability::{breadth, min_scheme_count, DefinabilityContext};
use vcdlab::definer::{lemma31_define, vcd_certificate, zero_type_partition, VcdOptions};
use vcdlab::gallery::{make_grid_order, make_hypercube_poset, random_width_poset, GridOrderSpec, HypercubePosetSpec};
use vcdlab::io::ModelFile;
use vcdlab::logic::{eval_with, parse_formula, satisfier_set_with, Formula, Term, Vocabulary};
use vcdlab::symmetry::{automorphism_generators, orbits};
use vcdlab::typespace::{enumerate_types, realize_type, ParamSet};
use vcdlab::verify::{run_suite, Suite};
use vcdlab::{Element, Error, FiniteStructure, Limits, ORDER};

fn err(e: Error) -> PyErr {
    match e {
        Error::ResourceCap(_) | Error::Replay(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    let json = py.import("json")?;
    Ok(json.call_method1("loads", (v.to_string(),))?.unbind())
}

/// A finite structure with its named element sets.
#[pyclass(name = "Structure", frozen)]
struct PyStructure {
    file: ModelFile,
    structure: FiniteStructure,
}

impl PyStructure {
    fn wrap(file: ModelFile) -> PyResult<Self> {
        let structure = file.to_structure().map_err(err)?;
        Ok(PyStructure { file, structure })
    }

    /// A set given as a list of indices, or as text understood by the
    /// command line (`B`, `all`, `none`, `0,3,5`).
    fn set(&self, spec: &Bound<'_, PyAny>) -> PyResult<Vec<Element>> {
        if let Ok(list) = spec.extract::<Vec<Element>>() {
            let mut list = list;
            for &e in &list {
                self.structure.check_element(e).map_err(err)?;
            }
            list.sort_unstable();
            list.dedup();
            return Ok(list);
        }
        let text: String = spec.extract()?;
        parse_set(&self.file, &self.structure, &text).map_err(err)
    }

    fn params(&self, spec: &Bound<'_, PyAny>) -> PyResult<(Vec<Element>, ParamSet)> {
        let b = self.set(spec)?;
        let p = ParamSet::elements(&b).map_err(err)?;
        Ok((b, p))
    }
}

#[pymethods]
impl PyStructure {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Self::wrap(ModelFile::parse(text).map_err(err)?)
    }

    #[staticmethod]
    fn grid(n: usize, k: usize) -> PyResult<Self> {
        let g = make_grid_order(GridOrderSpec { n, k }).map_err(err)?;
        let sets = BTreeMap::from([("B".to_string(), g.params.clone()), ("A".to_string(), g.realizers.clone())]);
        Self::wrap(ModelFile::from_structure(&g.structure, sets))
    }

    #[staticmethod]
    fn hypercube(d: usize) -> PyResult<Self> {
        let h = make_hypercube_poset(HypercubePosetSpec { d }).map_err(err)?;
        let sets = BTreeMap::from([
            ("B".to_string(), h.hyperplanes.clone()),
            ("H".to_string(), h.hyperplanes.clone()),
            ("A".to_string(), h.points.clone()),
            ("P".to_string(), h.points.clone()),
        ]);
        Self::wrap(ModelFile::from_structure(&h.structure, sets))
    }

    #[staticmethod]
    #[pyo3(signature = (width, size, seed=0))]
    fn random(width: usize, size: usize, seed: u64) -> PyResult<Self> {
        let s = random_width_poset(width, size, seed, &Limits::from_env()).map_err(err)?;
        Self::wrap(ModelFile::from_structure(&s, BTreeMap::new()))
    }

    fn to_json(&self) -> String {
        self.file.to_json()
    }

    #[getter]
    fn universe_size(&self) -> usize {
        self.structure.universe_size()
    }

    #[getter]
    fn sets(&self) -> BTreeMap<String, Vec<Element>> {
        self.file.sets.clone()
    }

    #[getter]
    fn labels(&self) -> BTreeMap<String, Element> {
        self.structure.labels().clone()
    }

    fn element(&self, name: &str) -> PyResult<Element> {
        parse_element(&self.structure, name).map_err(err)
    }

    fn less(&self, a: Element, b: Element) -> PyResult<bool> {
        Ok(self.structure.poset(ORDER).map_err(err)?.lt(a, b))
    }

    fn width(&self) -> PyResult<usize> {
        self.structure.poset(ORDER).map_err(err)?.width(&Limits::from_env()).map_err(err)
    }

    fn maximum_antichain(&self) -> PyResult<Vec<Element>> {
        let p = self.structure.poset(ORDER).map_err(err)?;
        p.maximum_antichain(&Limits::from_env()).map_err(err)
    }

    /// Orbits of the full automorphism group.
    fn zero_types(&self) -> PyResult<Vec<Vec<Element>>> {
        let p = self.structure.poset(ORDER).map_err(err)?;
        Ok(zero_type_partition(&p, &Limits::from_env()).map_err(err)?.classes)
    }

    /// Generators (image lists) and orbits of the automorphisms fixing `fixed`.
    #[pyo3(signature = (fixed=Vec::new()))]
    fn automorphisms(&self, py: Python<'_>, fixed: Vec<Element>) -> PyResult<Py<PyAny>> {
        let lim = Limits::from_env();
        let gens = automorphism_generators(&self.structure, &fixed, &lim).map_err(err)?;
        let orb = orbits(&self.structure, &fixed, &lim).map_err(err)?;
        to_py(py, &json!({ "generators": gens, "orbits": orb.orbits }))
    }

    /// Breadth of `{x < b : b in B}`.
    #[pyo3(signature = (params=None))]
    fn breadth(&self, py: Python<'_>, params: Option<&Bound<'_, PyAny>>) -> PyResult<Option<usize>> {
        let b = match params {
            Some(p) => self.set(p)?,
            None => (0..self.structure.universe_size()).collect(),
        };
        let lim = Limits::from_env();
        let family = py.detach(|| {
            b.iter()
                .map(|&e| satisfier_set_with(&self.structure, &Formula::less(Term::var("x"), Term::Const(e)), "x", &lim))
                .collect::<Result<Vec<_>, _>>()
        });
        Ok(breadth(&family.map_err(err)?, lim.breadth_cap).breadth)
    }

    /// Evaluates a formula under variable bindings.
    #[pyo3(signature = (formula, **bindings))]
    fn eval(&self, formula: &str, bindings: Option<BTreeMap<String, Element>>) -> PyResult<bool> {
        let f = parse_formula(formula, &Vocabulary::of(&self.structure)).map_err(err)?;
        eval_with(&self.structure, &f, &bindings.unwrap_or_default(), &Limits::from_env()).map_err(err)
    }

    /// Realized `Δ`-types over `B`, as positive `(formula, parameter)` pairs
    /// with realizers.
    #[pyo3(signature = (params, delta="order"))]
    fn types(&self, py: Python<'_>, params: &Bound<'_, PyAny>, delta: &str) -> PyResult<Py<PyAny>> {
        let delta = parse_delta(&self.structure, delta).map_err(err)?;
        let (_, p) = self.params(params)?;
        let types = enumerate_types(&self.structure, &delta, &p, None, &Limits::from_env()).map_err(err)?;
        to_py(py, &json!(types))
    }

    /// Def-sets of the types over `B` at tuple length `d` and the
    /// scheme-count lower bound.
    #[pyo3(signature = (params, d, delta="order", type_of=None, over=None))]
    fn definability(
        &self,
        py: Python<'_>,
        params: &Bound<'_, PyAny>,
        d: usize,
        delta: &str,
        type_of: Option<Element>,
        over: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Py<PyAny>> {
        let delta = parse_delta(&self.structure, delta).map_err(err)?;
        let (b, p) = self.params(params)?;
        let over = over.map(|o| self.set(o)).transpose()?;
        let lim = Limits::from_env();
        let s = &self.structure;
        let out = py.detach(|| -> vcdlab::Result<Value> {
            let types = match type_of {
                Some(a) => vec![realize_type(s, &delta, &[a], &p, &lim)?],
                None => enumerate_types(s, &delta, &p, over.as_deref(), &lim)?,
            };
            let ctx = DefinabilityContext::new(s, &delta, &p, &lim)?;
            let defs = ctx.def_sets(&types, d)?;
            let shown: Vec<Value> = types
                .iter()
                .zip(&defs)
                .map(|(t, def)| {
                    let tuples: Vec<Vec<Vec<Element>>> = def.iter().map(|x| p.resolve(x)).collect();
                    json!({ "trace": t, "def_set": tuples })
                })
                .collect();
            let bound = min_scheme_count(types.into_iter().zip(defs).collect(), d);
            Ok(json!({ "params": b, "d": d, "types": shown, "lower_bound": bound.lower_bound }))
        });
        to_py(py, &out.map_err(err)?)
    }

    /// Runs the recursive definer for the type of `c`.
    #[pyo3(signature = (psi, c, params, d, phi="order"))]
    fn lemma31(
        &self,
        py: Python<'_>,
        psi: &str,
        c: Element,
        params: &Bound<'_, PyAny>,
        d: usize,
        phi: &str,
    ) -> PyResult<Py<PyAny>> {
        let psi = parse_formula(psi, &Vocabulary::of(&self.structure)).map_err(err)?;
        let delta = parse_delta(&self.structure, phi).map_err(err)?;
        let (_, p) = self.params(params)?;
        let res = lemma31_define(&self.structure, &psi, "x", &delta, c, &p, d, &Limits::from_env()).map_err(err)?;
        let mut v = json!(res);
        v["printed"] = json!(res.formulas.iter().map(ToString::to_string).collect::<Vec<_>>());
        to_py(py, &v)
    }

    /// Certifies every type over `B` with `⌊log₂ width⌋` parameters.
    #[pyo3(signature = (params, delta="order", forced_d=None))]
    fn vcd(&self, py: Python<'_>, params: &Bound<'_, PyAny>, delta: &str, forced_d: Option<usize>) -> PyResult<Py<PyAny>> {
        let delta = parse_delta(&self.structure, delta).map_err(err)?;
        let (_, p) = self.params(params)?;
        let poset = self.structure.poset(ORDER).map_err(err)?;
        let lim = Limits::from_env();
        let r = py
            .detach(|| vcd_certificate(&poset, &delta, &p, VcdOptions { forced_d }, &lim))
            .map_err(err)?;
        to_py(py, &json!(r))
    }

    fn __repr__(&self) -> String {
        format!(
            "Structure(universe_size={}, sets={:?})",
            self.structure.universe_size(),
            self.file.sets.keys().collect::<Vec<_>>()
        )
    }
}

/// Runs a verification suite (`paper` or `quick`); one dict per criterion.
#[pyfunction]
#[pyo3(signature = (suite="quick", seed=0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Py<PyAny>> {
    let suite: Suite = suite.parse().map_err(err)?;
    let outcomes = py.detach(|| run_suite(suite, seed, &Limits::from_env()));
    to_py(py, &json!(outcomes))
}

#[pymodule]
pub fn pyvcdlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
