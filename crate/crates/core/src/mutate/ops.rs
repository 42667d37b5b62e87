use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_PI_6;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{select_cohort, FuzzRng, MutationError, NeighborPolicy, OpKind, Result, SigmaMode};
use crate::graph::{EdgeId, ElementRef, Family, Graph, VertexId};

/// Largest jitter norm, as a fraction of the noise scale.
pub(super) const JITTER_FRACTION: f64 = 0.1;

type Outcome = Result<(ElementRef, Vec<ElementRef>)>;

pub(super) struct Ctx<'a> {
    pub g: &'a mut Graph,
    pub rng: &'a mut FuzzRng,
    pub policy: &'a NeighborPolicy,
    pub scale: f64,
    pub params: BTreeMap<String, f64>,
    pub kind: OpKind,
}

fn vertex_refs(set: &BTreeSet<VertexId>) -> Vec<ElementRef> {
    set.iter().map(|&v| ElementRef::Vertex(v)).collect()
}

impl Ctx<'_> {
    pub fn run(&mut self) -> Outcome {
        use OpKind::*;
        match self.kind {
            AddVertexNoise => self.vertex_noise(),
            AddEdgeNoise => self.edge_noise(),
            SetVertexValue => self.set_vertex_value(),
            SetEdgeValue => self.set_edge_value(),
            InsertVertexOnEdge => self.insert_vertex_on_edge(),
            AddVertex => self.add_vertex(),
            DeleteVertex => self.delete_vertex(),
            DeleteEdge => self.delete_edge(),
            AddEdge => self.add_edge(),
            DeleteFace => self.delete_face(),
            EdgeFlip => self.edge_flip(),
            EdgeCollapse => self.edge_collapse(),
            FaceSplit => self.face_split(),
            TranslateCohort => self.translate_cohort(),
            ScaleCohort => self.scale_cohort(),
            RotateCohort => self.rotate_cohort(),
            SmoothCohort => self.smooth_cohort(),
            JitterSingleChannel => self.jitter_channel(),
            SwapVertexAttrs => self.swap_attrs(),
            DuplicateVertexFan => self.duplicate_fan(),
        }
    }

    fn noop(&self, reason: &str) -> MutationError {
        MutationError::NoOp { op: self.kind, reason: reason.into() }
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> Option<T> {
        if items.is_empty() {
            None
        } else {
            Some(items[self.rng.random_range(0..items.len())])
        }
    }

    fn random_vertex(&mut self) -> Result<VertexId> {
        let ids = self.g.vertex_ids();
        self.pick(&ids).ok_or_else(|| self.noop("no vertices"))
    }

    fn random_edge(&mut self) -> Result<EdgeId> {
        let ids = self.g.edge_ids();
        self.pick(&ids).ok_or_else(|| self.noop("no edges"))
    }

    fn param(&mut self, name: &str, value: f64) {
        self.params.insert(name.to_string(), value);
    }

    fn param_vec(&mut self, name: &str, values: &[f64]) {
        for (i, &x) in values.iter().enumerate() {
            self.params.insert(format!("{name}[{i}]"), x);
        }
    }

    /// Components that carry geometry: positions on meshes, everything else
    /// on the other families.
    fn geo_dims(&self) -> usize {
        if self.g.family() == Family::TriangleMesh {
            3
        } else {
            self.g.attr_len()
        }
    }

    fn gaussian(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.rng.sample::<f64, _>(StandardNormal) * self.scale).collect()
    }

    fn unit(&mut self, n: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..n).map(|_| self.rng.sample::<f64, _>(StandardNormal)).collect();
            let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if len > 1e-12 {
                return v.into_iter().map(|x| x / len).collect();
            }
        }
    }

    /// A per-member offset with norm below `JITTER_FRACTION * scale`.
    fn jitter(&mut self, n: usize) -> Vec<f64> {
        let dir = self.unit(n);
        let r = self.rng.random::<f64>() * JITTER_FRACTION * self.scale;
        dir.into_iter().map(|x| x * r).collect()
    }

    fn jitter_scalar(&mut self) -> f64 {
        (self.rng.random::<f64>() * 2.0 - 1.0) * JITTER_FRACTION * self.scale
    }

    fn shift(&mut self, v: VertexId, delta: &[f64]) -> Result<()> {
        let mut attrs = self.g.attrs(v)?.to_vec();
        for (a, d) in attrs.iter_mut().zip(delta) {
            *a += d;
        }
        self.g.set_attrs(v, attrs)?;
        Ok(())
    }

    /// Moves every cohort member by `delta`, adding jitter to all but the anchor.
    fn co_shift(&mut self, anchor: VertexId, cohort: &BTreeSet<VertexId>, delta: &[f64]) -> Result<()> {
        for &m in cohort {
            let mut d = delta.to_vec();
            if m != anchor {
                for (x, j) in d.iter_mut().zip(self.jitter(delta.len())) {
                    *x += j;
                }
            }
            self.shift(m, &d)?;
        }
        Ok(())
    }

    fn link(&mut self, a: VertexId, b: VertexId) -> Result<EdgeId> {
        if self.g.family() == Family::Sequence {
            Ok(self.g.add_edge(a, b, 1.0)?)
        } else {
            Ok(self.g.add_edge_natural(a, b)?)
        }
    }

    fn geo(&self, v: VertexId) -> Result<Vec<f64>> {
        let n = self.geo_dims();
        Ok(self.g.attrs(v)?[..n].to_vec())
    }

    fn centroid(&self, members: &BTreeSet<VertexId>) -> Result<Vec<f64>> {
        let mut c = vec![0.0; self.geo_dims()];
        for &m in members {
            for (x, y) in c.iter_mut().zip(self.geo(m)?) {
                *x += y;
            }
        }
        Ok(c.into_iter().map(|x| x / members.len() as f64).collect())
    }

    fn midpoint(&self, a: VertexId, b: VertexId) -> Result<Vec<f64>> {
        let (pa, pb) = (self.g.attrs(a)?, self.g.attrs(b)?);
        Ok(pa.iter().zip(pb).map(|(x, y)| 0.5 * (x + y)).collect())
    }

    fn cohort(&mut self, anchor: VertexId) -> Result<BTreeSet<VertexId>> {
        select_cohort(self.g, anchor, self.policy, self.rng)
    }

    /// Edges sharing an endpoint with `anchor`, sampled by weight similarity.
    fn edge_cohort(&mut self, anchor: EdgeId) -> Result<BTreeSet<EdgeId>> {
        let mut out = BTreeSet::from([anchor]);
        if !self.policy.enabled || self.policy.rho <= 0.0 {
            return Ok(out);
        }
        let (a, b) = self.g.edge(anchor)?.endpoints;
        let mut candidates = BTreeSet::new();
        for v in [a, b] {
            candidates.extend(self.g.incident_edges(v)?.iter().copied().filter(|&e| e != anchor));
        }
        if candidates.is_empty() {
            return Ok(out);
        }
        let w0 = self.g.edge(anchor)?.weight;
        let weights: Vec<(EdgeId, f64)> =
            candidates.iter().map(|&e| Ok((e, self.g.edge(e)?.weight))).collect::<Result<_>>()?;
        let sigma = match self.policy.sigma {
            SigmaMode::Fixed(s) => s,
            SigmaMode::MeanEdgeLength => {
                let mean = weights.iter().map(|w| w.1.abs()).sum::<f64>() / weights.len() as f64;
                if mean > 0.0 {
                    mean
                } else {
                    1.0
                }
            }
        };
        let sims: Vec<(EdgeId, f64)> = weights
            .into_iter()
            .map(|(e, w)| (e, (-(w - w0) * (w - w0) / (2.0 * sigma * sigma)).exp()))
            .collect();
        let max_s = sims.iter().map(|s| s.1).fold(0.0, f64::max);
        for (e, s) in sims {
            if max_s > 0.0 && self.rng.random::<f64>() < self.policy.rho * s / max_s {
                out.insert(e);
            }
        }
        Ok(out)
    }

    fn vertex_noise(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let cohort = self.cohort(v)?;
        let n = self.geo_dims();
        let delta = self.gaussian(n);
        self.param_vec("delta", &delta);
        self.co_shift(v, &cohort, &delta)?;
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    fn shift_edges(&mut self, anchor: EdgeId, cohort: &BTreeSet<EdgeId>, delta: f64) -> Result<()> {
        for &e in cohort {
            let j = if e == anchor { 0.0 } else { self.jitter_scalar() };
            let w = self.g.edge(e)?.weight + delta + j;
            self.g.set_weight(e, w.max(0.0))?;
        }
        Ok(())
    }

    fn edge_noise(&mut self) -> Outcome {
        let e = self.random_edge()?;
        let cohort = self.edge_cohort(e)?;
        let delta = self.rng.sample::<f64, _>(StandardNormal) * self.scale;
        self.param("delta", delta);
        self.shift_edges(e, &cohort, delta)?;
        Ok((ElementRef::Edge(e), cohort.into_iter().map(ElementRef::Edge).collect()))
    }

    fn set_vertex_value(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let (lo, hi) = self.g.attr_bounds().ok_or_else(|| self.noop("no vertices"))?;
        let cohort = self.cohort(v)?;
        let current = self.geo(v)?;
        let delta: Vec<f64> = current
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let target = if hi[i] > lo[i] { self.rng.random_range(lo[i]..hi[i]) } else { lo[i] };
                target - x
            })
            .collect();
        self.param_vec("delta", &delta);
        self.co_shift(v, &cohort, &delta)?;
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    fn set_edge_value(&mut self) -> Outcome {
        let e = self.random_edge()?;
        let max_w = self.g.edges().map(|x| x.weight).fold(0.0, f64::max);
        let upper = if max_w > 0.0 { 2.0 * max_w } else { 1.0 };
        let target = self.rng.random_range(0.0..upper);
        let cohort = self.edge_cohort(e)?;
        let delta = target - self.g.edge(e)?.weight;
        self.param("delta", delta);
        self.shift_edges(e, &cohort, delta)?;
        Ok((ElementRef::Edge(e), cohort.into_iter().map(ElementRef::Edge).collect()))
    }

    fn insert_vertex_on_edge(&mut self) -> Outcome {
        let e = self.random_edge()?;
        let (a, b) = self.g.edge(e)?.endpoints;
        let mid = self.midpoint(a, b)?;
        self.g.remove_edge(e)?;
        let m = self.g.add_vertex(mid)?;
        self.link(a, m)?;
        self.link(m, b)?;
        self.param("vertex", m.index() as f64);
        Ok((ElementRef::Edge(e), vec![ElementRef::Edge(e)]))
    }

    fn add_vertex(&mut self) -> Outcome {
        if self.g.family() == Family::TriangleMesh {
            let faces = self.g.face_ids();
            let f = self.pick(&faces).ok_or_else(|| self.noop("no faces"))?;
            let corners = self.g.face(f)?.corners;
            let c = self.g.face_centroid(f)?;
            let offset = self.gaussian(3);
            let mut attrs = self.g.attrs(corners[0])?.to_vec();
            for i in 0..3 {
                attrs[i] = c[i] + offset[i];
            }
            let u = self.g.add_vertex(attrs)?;
            let connect = self.rng.random_bool(0.5);
            if connect {
                for c in corners {
                    self.link(u, c)?;
                }
            }
            self.param("vertex", u.index() as f64);
            self.param("connected", if connect { 1.0 } else { 0.0 });
            return Ok((ElementRef::Face(f), vec![ElementRef::Face(f)]));
        }
        let v = self.random_vertex()?;
        let mut attrs = self.g.attrs(v)?.to_vec();
        if self.g.family() == Family::Sequence {
            // Repeat the token right after the anchor.
            let u = self.g.add_vertex(attrs)?;
            let next = self.g.incident_edges(v)?.iter().copied().find(|&e| {
                self.g.edge(e).is_ok_and(|x| x.endpoints.0 == v)
            });
            if let Some(next) = next {
                let succ = self.g.edge(next)?.endpoints.1;
                self.g.remove_edge(next)?;
                self.link(u, succ)?;
            }
            self.link(v, u)?;
            self.param("vertex", u.index() as f64);
        } else {
            for (a, d) in attrs.iter_mut().zip(self.gaussian(self.g.attr_len())) {
                *a += d;
            }
            let u = self.g.add_vertex(attrs)?;
            self.link(v, u)?;
            self.param("vertex", u.index() as f64);
        }
        Ok((ElementRef::Vertex(v), vec![ElementRef::Vertex(v)]))
    }

    fn delete_vertex(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        if self.g.family() == Family::Sequence {
            let mut preds = Vec::new();
            let mut succs = Vec::new();
            for &e in self.g.incident_edges(v)? {
                let (a, b) = self.g.edge(e)?.endpoints;
                if b == v {
                    preds.push(a);
                } else {
                    succs.push(b);
                }
            }
            self.g.remove_vertex(v)?;
            // Keep the token order connected across the gap.
            for &p in &preds {
                for &s in &succs {
                    if p != s && self.g.edge_between(p, s).is_none() {
                        self.link(p, s)?;
                    }
                }
            }
        } else {
            self.g.remove_vertex(v)?;
        }
        Ok((ElementRef::Vertex(v), vec![ElementRef::Vertex(v)]))
    }

    fn delete_edge(&mut self) -> Outcome {
        let e = self.random_edge()?;
        self.g.remove_edge(e)?;
        Ok((ElementRef::Edge(e), vec![ElementRef::Edge(e)]))
    }

    fn add_edge(&mut self) -> Outcome {
        if self.g.family() == Family::TriangleMesh {
            let loose: Vec<VertexId> = self
                .g
                .vertices()
                .filter(|v| self.g.vertex_faces(v.id).is_ok_and(|f| f.is_empty()))
                .map(|v| v.id)
                .collect();
            let faces = self.g.face_ids();
            if faces.is_empty() {
                return Err(self.noop("no faces"));
            }
            let u = self.pick(&loose).ok_or_else(|| self.noop("no vertex outside every face"))?;
            let f = self.pick(&faces).expect("non-empty");
            let corners = self.g.face(f)?.corners;
            let missing: Vec<VertexId> =
                corners.into_iter().filter(|&c| self.g.edge_between(u, c).is_none()).collect();
            if missing.is_empty() {
                return Err(self.noop("already connected"));
            }
            for c in missing {
                self.link(u, c)?;
            }
            self.param("face", f.index() as f64);
            return Ok((ElementRef::Vertex(u), vec![ElementRef::Vertex(u)]));
        }
        for _ in 0..8 {
            let u = self.random_vertex()?;
            let w = self.random_vertex()?;
            if u != w && self.g.edge_between(u, w).is_none() {
                self.link(u, w)?;
                self.param("target", w.index() as f64);
                return Ok((ElementRef::Vertex(u), vec![ElementRef::Vertex(u)]));
            }
        }
        Err(self.noop("no unconnected pair found"))
    }

    fn delete_face(&mut self) -> Outcome {
        let faces = self.g.face_ids();
        let f = self.pick(&faces).ok_or_else(|| self.noop("no faces"))?;
        self.g.remove_face(f)?;
        Ok((ElementRef::Face(f), vec![ElementRef::Face(f)]))
    }

    fn edge_flip(&mut self) -> Outcome {
        if self.g.face_count() < 2 {
            return Err(self.noop("fewer than two faces"));
        }
        for _ in 0..16 {
            let e = self.random_edge()?;
            let faces = self.g.incident_faces(e)?;
            if faces.len() != 2 {
                continue;
            }
            let (a, b) = self.g.edge(e)?.endpoints;
            let c1 = self.g.face(faces[0])?.corners;
            let c2 = self.g.face(faces[1])?.corners;
            let third = |cs: [VertexId; 3]| cs.into_iter().find(|&x| x != a && x != b).expect("triangle");
            let (c, d) = (third(c1), third(c2));
            if c == d || self.g.edge_between(c, d).is_some() {
                continue;
            }
            let i = c1.iter().position(|&x| x == a).expect("corner");
            let (p, q) = if c1[(i + 1) % 3] == b { (a, b) } else { (b, a) };
            self.g.remove_edge(e)?;
            self.g.add_face([p, d, c])?;
            self.g.add_face([q, c, d])?;
            return Ok((ElementRef::Edge(e), vec![ElementRef::Edge(e)]));
        }
        Err(self.noop("no flippable interior edge found"))
    }

    fn edge_collapse(&mut self) -> Outcome {
        let e = self.random_edge()?;
        let (a, b) = self.g.edge(e)?.endpoints;
        let mid = self.midpoint(a, b)?;
        self.g.merge_vertices(a, b)?;
        self.g.set_attrs(a, mid)?;
        self.param("removed", b.index() as f64);
        Ok((ElementRef::Edge(e), vec![ElementRef::Edge(e)]))
    }

    fn face_split(&mut self) -> Outcome {
        let faces = self.g.face_ids();
        let f = self.pick(&faces).ok_or_else(|| self.noop("no faces"))?;
        let [a, b, c] = self.g.face(f)?.corners;
        let centroid = self.g.face_centroid(f)?;
        let mut attrs = self.g.attrs(a)?.to_vec();
        attrs[..3].copy_from_slice(&centroid);
        self.g.remove_face(f)?;
        let m = self.g.add_vertex(attrs)?;
        self.g.add_face([a, b, m])?;
        self.g.add_face([b, c, m])?;
        self.g.add_face([c, a, m])?;
        self.param("vertex", m.index() as f64);
        Ok((ElementRef::Face(f), vec![ElementRef::Face(f)]))
    }

    fn translate_cohort(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let cohort = self.cohort(v)?;
        let n = self.geo_dims();
        let magnitude = 5.0 * self.scale;
        let t: Vec<f64> = self.unit(n).into_iter().map(|x| x * magnitude).collect();
        self.param_vec("translation", &t);
        self.co_shift(v, &cohort, &t)?;
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    /// Replaces each member's geometry with `map(old)`, plus jitter off-anchor.
    fn co_map(
        &mut self,
        anchor: VertexId,
        cohort: &BTreeSet<VertexId>,
        map: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<()> {
        for &m in cohort {
            let old = self.geo(m)?;
            let mut new = map(&old);
            if m != anchor {
                for (x, j) in new.iter_mut().zip(self.jitter(old.len())) {
                    *x += j;
                }
            }
            let delta: Vec<f64> = new.iter().zip(&old).map(|(a, b)| a - b).collect();
            self.shift(m, &delta)?;
        }
        Ok(())
    }

    fn scale_cohort(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let cohort = self.cohort(v)?;
        let factor = self.rng.random_range(0.8..1.25);
        let c = self.centroid(&cohort)?;
        self.param("factor", factor);
        self.co_map(v, &cohort, |p| p.iter().zip(&c).map(|(x, c)| c + factor * (x - c)).collect())?;
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    fn rotate_cohort(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let cohort = self.cohort(v)?;
        let k = self.unit(3);
        let angle = self.rng.random_range(-FRAC_PI_6..FRAC_PI_6);
        let c = self.centroid(&cohort)?;
        self.param_vec("axis", &k);
        self.param("angle", angle);
        let (s, co) = angle.sin_cos();
        self.co_map(v, &cohort, |p| {
            let r = [p[0] - c[0], p[1] - c[1], p[2] - c[2]];
            let kxr = [k[1] * r[2] - k[2] * r[1], k[2] * r[0] - k[0] * r[2], k[0] * r[1] - k[1] * r[0]];
            let kdr = k[0] * r[0] + k[1] * r[1] + k[2] * r[2];
            let mut out = p.to_vec();
            for i in 0..3 {
                out[i] = c[i] + r[i] * co + kxr[i] * s + k[i] * kdr * (1.0 - co);
            }
            out
        })?;
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    fn smooth_cohort(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let cohort = self.cohort(v)?;
        let lambda = 0.5;
        self.param("lambda", lambda);
        let mut targets = Vec::new();
        for &m in &cohort {
            let adj = self.g.adjacent(m)?;
            if adj.is_empty() {
                continue;
            }
            let p = self.geo(m)?;
            let mut mean = vec![0.0; p.len()];
            for &w in &adj {
                for (x, y) in mean.iter_mut().zip(self.geo(w)?) {
                    *x += y / adj.len() as f64;
                }
            }
            targets.push((m, p.iter().zip(&mean).map(|(x, y)| lambda * (y - x)).collect::<Vec<f64>>()));
        }
        for (m, delta) in targets {
            self.shift(m, &delta)?;
        }
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    fn jitter_channel(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let cohort = self.cohort(v)?;
        let channel = self.rng.random_range(0..self.geo_dims());
        let delta = self.rng.sample::<f64, _>(StandardNormal) * self.scale;
        self.param("channel", channel as f64);
        self.param("delta", delta);
        for &m in &cohort {
            let j = if m == v { 0.0 } else { self.jitter_scalar() };
            let mut d = vec![0.0; channel + 1];
            d[channel] = delta + j;
            self.shift(m, &d)?;
        }
        Ok((ElementRef::Vertex(v), vertex_refs(&cohort)))
    }

    fn swap_attrs(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let near: Vec<VertexId> = self.g.neighbors(v, self.policy.hops.max(1))?.into_iter().collect();
        let w = self.pick(&near).ok_or_else(|| self.noop("anchor has no neighbors"))?;
        let (a, b) = (self.g.attrs(v)?.to_vec(), self.g.attrs(w)?.to_vec());
        self.g.set_attrs(v, b)?;
        self.g.set_attrs(w, a)?;
        self.param("partner", w.index() as f64);
        Ok((ElementRef::Vertex(v), vec![ElementRef::Vertex(v)]))
    }

    fn duplicate_fan(&mut self) -> Outcome {
        let v = self.random_vertex()?;
        let mut attrs = self.g.attrs(v)?.to_vec();
        if self.g.family() != Family::Sequence {
            for (a, d) in attrs.iter_mut().zip(self.gaussian(self.geo_dims())) {
                *a += d;
            }
        }
        let u = self.g.add_vertex(attrs)?;
        let faces = self.g.vertex_faces(v)?.to_vec();
        for f in faces {
            let corners = self.g.face(f)?.corners.map(|c| if c == v { u } else { c });
            self.g.add_face(corners)?;
        }
        let edges = self.g.incident_edges(v)?.to_vec();
        for e in edges {
            let (a, b) = self.g.edge(e)?.endpoints;
            let (a, b) = if a == v { (u, b) } else { (a, u) };
            if self.g.edge_between(a, b).is_none() {
                self.link(a, b)?;
            }
        }
        self.param("vertex", u.index() as f64);
        Ok((ElementRef::Vertex(v), vec![ElementRef::Vertex(v)]))
    }
}
