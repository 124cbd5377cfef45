// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_RWG_HPP
#define MACROSURF_RWG_HPP

#include <array>
#include <vector>
#include "macrosurf/mesh.hpp"

namespace macrosurf
{

// Rao-Wilton-Glisson function on the edge (v0, v1), v0 < v1. On the plus
// triangle it is l/(2A) (r - p+), on the minus triangle l/(2A) (p- - r).
// The plus triangle is the one whose sorted vertex triple is lexicographically
// smaller, so the choice is invariant under translation of the mesh.
struct Rwg
{
  int v0 = -1, v1 = -1;
  std::array<int, 2> tri = {-1, -1};   // plus, minus
  std::array<int, 2> free = {-1, -1};  // free vertex of plus, minus
  double length = 0.0;
  // +1 if the plus triangle's winding runs v0 -> v1.
  double orientation = 1.0;
};

// RWGs on all edges shared by exactly two triangles of `subset`, ordered by
// edge key. Edges shared by more than two subset triangles raise
// AssemblyError.
std::vector<Rwg> BuildRwgs(const TriMesh &mesh, const std::vector<int> &subset);

// Per-triangle view of a basis list: which bases live on the triangle, at
// which local vertex (the free vertex) and with which sign.
struct TriangleBasis
{
  int basis;
  int local_vertex;
  double sign;  // +1 plus, -1 minus
};

std::vector<std::vector<TriangleBasis>> TriangleIncidence(const TriMesh &mesh,
                                                          const std::vector<Rwg> &rwgs);

// Value of a basis function at a point r of triangle `half` (0 plus, 1 minus).
Vec3 EvaluateRwg(const TriMesh &mesh, const Rwg &f, int half, const Vec3 &r);

// Correspondence between two basis lists whose meshes touch. For every basis
// a of `ba` that shares a geometrically coincident triangle with a basis b of
// `bb` on the same edge (mesh b shifted by `shift_b`), records (a, b, s) with
// s = sigma_a * sigma_b on the common triangle, i.e. f_a = s f_b there.
struct BasisMatch
{
  int a;
  int b;
  double sign;
};

std::vector<BasisMatch> MatchBases(const TriMesh &ma, const std::vector<Rwg> &ba,
                                   const TriMesh &mb, const std::vector<Rwg> &bb,
                                   const Vec3 &shift_b, double tolerance);

}  // namespace macrosurf

#endif  // MACROSURF_RWG_HPP
