from .codec import (
    load_order,
    parse_image,
    pre_mars_pages,
    read_image,
    serialize_image,
    write_image,
)

__all__ = [
    "load_order",
    "parse_image",
    "pre_mars_pages",
    "read_image",
    "serialize_image",
    "write_image",
]
