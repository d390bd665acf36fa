"""The individual-secrecy rate region: direct form, elimination, polygons."""

# %%
from secrecy_lab.channel import BroadcastChannelSpec, MutualInfoProfile, bsc
from secrecy_lab.region import eliminate, polygon_of, pre_fm_system, search_distributions, systems_equivalent, theorem2_system

mi = MutualInfoProfile(i_u1_y1=1.0, i_u2_y2=1.0, i_u1_z=0.2, i_u2_z=0.3, i_u1_u2=0.4)

# %% constraints with the randomization rates still present
pre = pre_fm_system(mi)
print(pre, "\n")

# %% project out Rl1 and Rl2
proj = eliminate(pre, ["Rl1", "Rl2"])
print(proj, "\n")
print("matches the direct region:", systems_equivalent(proj, theorem2_system(mi)))

# %% closure as a polygon
poly = polygon_of(proj)
print("vertices:", poly.vertices, "area:", round(poly.area(), 4), "strict edges:", poly.edge_strict)

# %% sampled union over auxiliary distributions for a concrete channel
ch = BroadcastChannelSpec.from_components(bsc(0.05), bsc(0.1), bsc(0.3))
res = search_distributions(ch, 2, 2, samples=300, seed=1)
print(f"{len(res.samples)} of 300 samples satisfy the side condition")
print("outer vertices of the union:", [(round(a, 3), round(b, 3)) for a, b in res.union_vertices])
