"""Template instructions for generated tasks."""
import warnings

from ..errors import NoSupportError
from ..support import support_link_of

TEMPLATES = {
    "Pick": ("Pick {obj} in {room} on {pos}", "Pick up {obj} in {room} on {pos}", "Grab {obj} in {room} on {pos}"),
    "Place": ("Place {obj} in {room} on {pos}", "Put {obj} in {room} on {pos}", "Set {obj} down in {room} on {pos}"),
}
BARE = {"Pick": "Pick {obj}", "Place": "Place {obj}"}


def _the(label):
    return "the " + label


def make_instruction(task, scene, variants=False):
    """Fill the action template from the scene's room and label attributes.

    The position is the object's current support for picks and the target
    support for placements. With ``variants`` the wording is picked by the
    task seed; otherwise the first template is used. Missing labels fall
    back to the bare "Pick the <object>" form with a warning.
    """
    obj = _the(scene.link(task.target_link).label)
    room = scene.room_labels.get(task.target_link)
    pos_link = task.support_link
    if pos_link is None:
        try:
            pos_link = support_link_of(scene, task.target_link)
        except NoSupportError:
            pos_link = None
    if not room or pos_link is None:
        warnings.warn(f"no room or position label for {task.target_link!r}; using the bare template",
                      stacklevel=2)
        return BARE[task.action].format(obj=obj)
    options = TEMPLATES[task.action]
    template = options[task.seed % len(options)] if variants else options[0]
    return template.format(obj=obj, room=_the(room), pos=_the(scene.link(pos_link).label))
