import pytest
from hypothesis import settings

from helpers import load_schema

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def schema_validator():
    from jsonschema import Draft202012Validator
    from referencing import Registry, Resource

    names = ["ensemble", "povm", "channel", "conditions", "report", "oracle", "channel_result"]
    registry = Registry().with_resources(
        (f"{n}.schema.json", Resource.from_contents(load_schema(n))) for n in names
    )

    def validate(doc, name):
        Draft202012Validator(load_schema(name), registry=registry).validate(doc)

    return validate
