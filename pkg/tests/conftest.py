import numpy as np
import pytest

from actfloor import actsim, core, furnish, genlab, procgen


@pytest.fixture(scope="session")
def plans():
    """A handful of procedurally generated floorplans."""
    return [procgen.generate_floorplan(seed=s) for s in range(8)]


@pytest.fixture(scope="session")
def furnished(plans):
    """(floorplan, furniture, activity) triples for the same seeds."""
    out = []
    for s, fp in enumerate(plans):
        furniture = furnish.place_primary_furniture(fp, seed=s)
        amap = actsim.synthesize_activity_map(fp, furniture,
                                              actsim.BiRrtParams(), seed=s)
        out.append((fp, furniture, amap))
    return out


@pytest.fixture(scope="session")
def dataset_index(furnished):
    triples = [(f"p{i}", fp, amap) for i, (fp, _, amap) in enumerate(furnished)]
    return genlab.DatasetIndex.build(triples)


@pytest.fixture(scope="session")
def dataset_dir(tmp_path_factory, furnished):
    """On-disk dataset mirroring the in-memory fixtures."""
    root = tmp_path_factory.mktemp("dataset")
    for i, (fp, _, amap) in enumerate(furnished):
        core.save_floorplan(fp, root / f"p{i}")
        actsim.save_activity_f32(amap, root / f"p{i}" / "activity.actf32")
    return root


def boundary_png_bytes(fp):
    """RGB boundary upload for a floorplan: R=ring, G=inside, B=entrance."""
    import io

    from PIL import Image
    b = core.extract_boundary(fp)
    rgb = np.zeros((*fp.inside.shape, 3), dtype=np.uint8)
    rgb[..., 0] = b.boundary * 255
    rgb[..., 1] = fp.inside * 255
    rgb[..., 2] = b.entrance * 255
    buf = io.BytesIO()
    Image.fromarray(rgb).save(buf, format="PNG")
    return buf.getvalue()
