//! Keyframe creation policy, anchored map-point store and the pose graph.
//!
//! Map points cache their coordinates in the host keyframe's frame so that
//! re-anchoring after graph optimization is exact. Keyframe poses and map
//! points are updated together through [`KeyframeMap::apply_optimized_poses`]
//! so readers never observe a half-corrected map.

use crate::se2::{wrap_angle, Pose2, Twist2};
use crate::{Error, Result};
use nalgebra::{Matrix3, Vector2, Vector3};
use std::collections::BTreeMap;

/// Fallback odometry-edge information when the solver Hessian is unusable.
pub fn default_edge_information() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(100.0, 100.0, 400.0))
}

/// A landmark anchored to its host keyframe.
#[derive(Debug, Clone)]
pub struct MapPoint {
    pub id: u64,
    pub world_position: Vector2<f64>,
    pub host_keyframe: u64,
    /// Cached position in the host keyframe's frame.
    pub local_position: Vector2<f64>,
}

/// A keyframe: pose-graph node plus place-recognition payload.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub id: u64,
    pub pose: Pose2,
    pub twist: Twist2,
    pub stamp: f64,
    /// Structural point cloud in the keyframe's local frame.
    pub point_cloud: Vec<Vector2<f64>>,
    pub descriptor: Vec<f64>,
    /// PCA eigenvalue ratio of the point cloud.
    pub pca_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Odometry,
    Loop,
}

#[derive(Debug, Clone)]
pub struct PoseGraphEdge {
    pub from: u64,
    pub to: u64,
    /// Relative measurement `T_from^-1 * T_to`.
    pub measurement: Pose2,
    pub information: Matrix3<f64>,
    pub kind: EdgeKind,
}

/// Pose graph over keyframe nodes.
#[derive(Debug, Clone, Default)]
pub struct PoseGraph {
    nodes: BTreeMap<u64, Pose2>,
    edges: Vec<PoseGraphEdge>,
}

impl PoseGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: u64, pose: Pose2) {
        self.nodes.insert(id, pose);
    }

    pub fn node(&self, id: u64) -> Option<&Pose2> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> &BTreeMap<u64, Pose2> {
        &self.nodes
    }

    pub fn edges(&self) -> &[PoseGraphEdge] {
        &self.edges
    }

    pub fn set_node(&mut self, id: u64, pose: Pose2) -> Result<()> {
        match self.nodes.get_mut(&id) {
            Some(p) => {
                *p = pose;
                Ok(())
            }
            None => Err(Error::Graph(format!("unknown node {id}"))),
        }
    }

    fn add_edge(
        &mut self,
        from: u64,
        to: u64,
        measurement: Pose2,
        information: Matrix3<f64>,
        kind: EdgeKind,
    ) -> Result<()> {
        for id in [from, to] {
            if !self.nodes.contains_key(&id) {
                return Err(Error::Graph(format!("edge references unknown node {id}")));
            }
        }
        self.edges.push(PoseGraphEdge {
            from,
            to,
            measurement,
            information,
            kind,
        });
        Ok(())
    }

    pub fn add_odometry_edge(
        &mut self,
        from: u64,
        to: u64,
        measurement: Pose2,
        information: Matrix3<f64>,
    ) -> Result<()> {
        self.add_edge(from, to, measurement, information, EdgeKind::Odometry)
    }

    pub fn add_loop_edge(
        &mut self,
        from: u64,
        to: u64,
        measurement: Pose2,
        information: Matrix3<f64>,
    ) -> Result<()> {
        self.add_edge(from, to, measurement, information, EdgeKind::Loop)
    }
}

/// Keyframe creation thresholds.
#[derive(Debug, Clone)]
pub struct KeyframePolicy {
    pub distance_m: f64,
    pub rotation_rad: f64,
    pub min_tracked: usize,
}

impl Default for KeyframePolicy {
    fn default() -> Self {
        KeyframePolicy {
            distance_m: 2.0,
            rotation_rad: 0.2,
            min_tracked: 30,
        }
    }
}

/// Keyframe decision: distance, rotation or tracking-health trigger.
pub fn should_create_keyframe(
    current: &Pose2,
    tracked_count: usize,
    last_kf: &Keyframe,
    policy: &KeyframePolicy,
) -> bool {
    let dt = current.translation() - last_kf.pose.translation();
    let dyaw = wrap_angle(current.rotation() - last_kf.pose.rotation());
    dt.norm() > policy.distance_m || dyaw.abs() > policy.rotation_rad || tracked_count < policy.min_tracked
}

/// Keyframes, map points and the pose graph as one shared structure.
#[derive(Debug, Clone, Default)]
pub struct KeyframeMap {
    keyframes: BTreeMap<u64, Keyframe>,
    points: BTreeMap<u64, MapPoint>,
    graph: PoseGraph,
    next_point_id: u64,
}

impl KeyframeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn keyframes(&self) -> &BTreeMap<u64, Keyframe> {
        &self.keyframes
    }

    pub fn points(&self) -> &BTreeMap<u64, MapPoint> {
        &self.points
    }

    pub fn graph(&self) -> &PoseGraph {
        &self.graph
    }

    pub fn graph_mut(&mut self) -> &mut PoseGraph {
        &mut self.graph
    }

    pub fn last_keyframe(&self) -> Option<&Keyframe> {
        self.keyframes.values().next_back()
    }

    /// Inserts a keyframe and its graph node; ids must increase with stamp.
    pub fn insert_keyframe(&mut self, kf: Keyframe) -> Result<()> {
        if let Some(last) = self.last_keyframe() {
            if kf.id <= last.id || kf.stamp < last.stamp {
                return Err(Error::invalid(format!(
                    "keyframe id/stamp must increase: got id {} stamp {} after id {} stamp {}",
                    kf.id, kf.stamp, last.id, last.stamp
                )));
            }
        }
        self.graph.add_node(kf.id, kf.pose);
        self.keyframes.insert(kf.id, kf);
        Ok(())
    }

    /// Adds a point anchored to `host`, given its world position.
    pub fn add_point(&mut self, world_position: Vector2<f64>, host: u64) -> Result<u64> {
        let host_kf = self
            .keyframes
            .get(&host)
            .ok_or_else(|| Error::Graph(format!("unknown host keyframe {host}")))?;
        let local = host_kf.pose.inverse().act_on_point(&world_position);
        let id = self.next_point_id;
        self.next_point_id += 1;
        self.points.insert(
            id,
            MapPoint {
                id,
                world_position,
                host_keyframe: host,
                local_position: local,
            },
        );
        Ok(id)
    }

    /// Moves an existing point to a new world position, refreshing its
    /// cached host-frame coordinates.
    pub fn update_point(&mut self, id: u64, world_position: Vector2<f64>) -> Result<()> {
        let point = self
            .points
            .get_mut(&id)
            .ok_or_else(|| Error::Graph(format!("unknown map point {id}")))?;
        let host = self
            .keyframes
            .get(&point.host_keyframe)
            .ok_or_else(|| Error::Graph(format!("unknown host keyframe {}", point.host_keyframe)))?;
        point.world_position = world_position;
        point.local_position = host.pose.inverse().act_on_point(&world_position);
        Ok(())
    }

    /// Recomputes every point's world position from its host pose.
    pub fn reanchor_map_points(&mut self) {
        for point in self.points.values_mut() {
            if let Some(host) = self.keyframes.get(&point.host_keyframe) {
                point.world_position = host.pose.act_on_point(&point.local_position);
            }
        }
    }

    /// Applies optimized node poses and re-anchors points in one step.
    pub fn apply_optimized_poses(&mut self, optimized: &BTreeMap<u64, Pose2>) -> Result<()> {
        for (&id, pose) in optimized {
            let kf = self
                .keyframes
                .get_mut(&id)
                .ok_or_else(|| Error::Graph(format!("optimized pose for unknown keyframe {id}")))?;
            kf.pose = *pose;
            self.graph.set_node(id, *pose)?;
        }
        self.reanchor_map_points();
        Ok(())
    }

    /// Largest world/local inconsistency across all points, for assertions.
    pub fn max_anchor_error(&self) -> f64 {
        self.points
            .values()
            .filter_map(|p| {
                let host = self.keyframes.get(&p.host_keyframe)?;
                Some((host.pose.act_on_point(&p.local_position) - p.world_position).norm())
            })
            .fold(0.0, f64::max)
    }

    /// One "x y" line per map point, meters.
    pub fn export_points(&self) -> String {
        let mut out = String::new();
        for p in self.points.values() {
            out.push_str(&format!("{:.6} {:.6}\n", p.world_position.x, p.world_position.y));
        }
        out
    }
}
