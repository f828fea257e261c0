import numpy as np
import pytest

from veilkit.dataset import (
    Expression,
    FeatureDataset,
    Gender,
    SampleMeta,
)

# Subjects per age bracket in the full corpus: 36 children, 75 youth,
# 33 adults, 6 elderly; 14 images each (2 sessions x 7), images 6-7 of a
# session are the smile shots.
_BRACKETS = (
    (36, 8, 18),
    (75, 19, 30),
    (33, 31, 50),
    (6, 51, 77),
)


def make_vpi_like_meta() -> tuple[SampleMeta, ...]:
    metas = []
    subject = 0
    for count, lo, hi in _BRACKETS:
        for i in range(count):
            subject += 1
            age = lo + i % (hi - lo + 1)
            gender = Gender.MALE if subject <= 41 else Gender.FEMALE
            for session in (1, 2):
                for image in range(1, 8):
                    metas.append(
                        SampleMeta(
                            session=session,
                            subject=subject,
                            gender=gender,
                            age_years=age,
                            image_index=image,
                            expression=Expression.NORMAL if image <= 5 else Expression.SMILE,
                        )
                    )
    return tuple(metas)


@pytest.fixture(scope="session")
def vpi_like_dataset() -> FeatureDataset:
    meta = make_vpi_like_meta()
    feats = np.zeros((len(meta), 2))
    return FeatureDataset(features=feats, meta=meta, layer_tag="fc6")
