import abc

import yaml

from sscan.utils import enforce_no_abstract_class_instances
from sscan.yaml.sscan_yaml_loader import SscanLoader


class SscanYAMLObject(yaml.YAMLObject):
    """
        Abstract class for configuration objects that can be declared in YAML.
        Members are stored with a leading underscore, YAML keys carry none.
    """

    yaml_loader = SscanLoader

    def __init__(self):
        enforce_no_abstract_class_instances(self.__class__, SscanYAMLObject)

    def __setstate__(self, d):
        """
        Sets the state of the object from the parsed representation of the YAML.
        The keys read, which have no leading underscores, are converted to the internal
        representation with leading underscores, then validated.

        Note: Rather than overriding __setstate__(), subclasses should override
        _validate_and_convert_types(), which receives the keys with underscores.

        Args:
            d (dict): the parsed representation of the YAML object
        """
        current = self._convert_members_to_yaml_keys(dict(self.__dict__))
        current.update(d)
        d = self._convert_yaml_keys_to_members(current)

        d = self._validate_and_convert_types(d)

        for key, value in d.items():
            setattr(self, key, value)

    def __getstate__(self) -> dict:
        """
        Gets the state of the object for serialization to YAML.
        The keys are converted from their internal representation with leading underscores to
        the external representation without them.

        Returns:
            the modified state dictionary of the object we are serializing
        """
        d: dict = self.__dict__.copy()
        if d:
            d = self._convert_members_to_yaml_keys(d)
        return d

    @classmethod
    def _convert_yaml_keys_to_members(cls, d: dict) -> dict:
        """
        Translate the dictionary by adding underscores to all the keys.

        Args:
            d (dict): the parsed representation of the YAML object

        Returns:
            the state dictionary with member names as keys
        """
        return {f"_{key}": value for key, value in d.items()}

    @abc.abstractmethod
    def _validate_and_convert_types(self, d: dict) -> dict:
        """
        Validate the dictionary and convert the types of the values.

        Args:
            d (dict): the state dictionary, keys with leading underscores

        Returns:
            the validated state dictionary
        """
        return d

    @classmethod
    def _convert_members_to_yaml_keys(cls, d: dict) -> dict:
        """
        Translate the dictionary by removing underscores from all the keys

        Args:
            d (dict): the state dictionary of the object we are serializing
        """
        return {key[1:]: value for key, value in d.items() if key.startswith('_')}
